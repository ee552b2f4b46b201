#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nhmp::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kUnsupported = 3, kAmbiguous = 4, kShooting = 5 };

/// Runs the tool on `args` (args[0] is the program name). Summaries go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nhmp::cli
