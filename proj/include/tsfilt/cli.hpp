#pragma once

#include <iosfwd>

namespace tsfilt {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitInfeasible = 3,
  kExitNumerical = 4,
};

/// Entry point of the `tsfilt` command; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsfilt
