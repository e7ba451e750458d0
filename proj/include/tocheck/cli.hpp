#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tocheck {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitViolated = 1,
  kExitUsage = 2,
  kExitInvalid = 3,
  kExitInconclusive = 4,
};

// Runs one command. Machine output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tocheck
