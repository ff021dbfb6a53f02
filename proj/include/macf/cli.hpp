#pragma once

#include <ostream>
#include <string>

namespace macf {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitConfig = 2,
  kExitBlowUp = 3,
  kExitFail = 4,
};

inline constexpr const char* kVersion = "macf 1.0.0";

/// Entry point of the `macf` executable. Verdict lines go to `out` as
/// "VERDICT <name> PASS|FAIL <metric>=<value>"; diagnostics go to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace macf
