#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "imputeinr/matrix.hpp"
#include "imputeinr/rng.hpp"
#include "imputeinr/timeseries.hpp"

namespace testing {

inline imputeinr::Matrix random_matrix(std::size_t r, std::size_t c, imputeinr::Rng& rng,
                                       double lo = -1.0, double hi = 1.0) {
  imputeinr::Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

inline imputeinr::TimeSeriesWindow full_window(const imputeinr::Matrix& values) {
  imputeinr::TimeSeriesWindow w;
  w.values = values;
  w.mask = imputeinr::Matrix(values.rows, values.cols, 1.0);
  for (std::size_t v = 0; v < values.rows; ++v) w.variable_names.push_back("v" + std::to_string(v));
  w.t_grid = imputeinr::normalized_time_grid(values.cols);
  return w;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("imputeinr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace testing
