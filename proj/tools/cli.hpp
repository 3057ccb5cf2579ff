#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace toeplitzlda::cli {

/// Exit codes of the command line front end.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumerical = 3,
};

/// Runs one invocation. args[0] is the program name. Machine-readable
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toeplitzlda::cli
