#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace imputeinr::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kSchemaError = 2, kNumericsError = 3 };

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace imputeinr::cli
