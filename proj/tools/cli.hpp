#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kaczmarz::cli {

enum ExitCode : int { ok = 0, config_error = 2, io_error = 3, numerical_error = 4 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace kaczmarz::cli
