#include <iostream>

#include "cli.hpp"
#include "imputeinr/kernels.hpp"

int main(int argc, char** argv) {
  imputeinr::kernels::configure_threads_from_env();
  return imputeinr::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
