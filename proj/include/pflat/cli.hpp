#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pflat {

/// Exit codes of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one command line (args[0] is the program name). Reports go to
/// `--out` when given, otherwise to `out`; diagnostics go to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pflat
