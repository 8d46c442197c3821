#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcslam {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. Failures print a single line
///   error: kind=<Kind> exit=<code> message=<text>
/// on `err`. Usage problems are detected before anything is written.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fcslam
