#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ggrnet::cli {

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_config = 2,
  exit_data = 3,
  exit_numerical = 4,
  exit_gradcheck = 5,
};

/// Runs the command line `args` (without the program name). Results go to
/// `out`, diagnostics to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ggrnet::cli
