#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsink::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kIterationCap = 2,
  kSweepFailure = 3,
  kVerifyFailure = 4,
};

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsink::cli
