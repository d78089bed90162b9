#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scenenoise::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kEntryErrors = 1;  // run completed but some entries (or checks) failed
inline constexpr int kUsage = 2;        // bad arguments or configuration

// Runs one subcommand. `args` excludes the program name. Results go to
// `out`, diagnostics and logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scenenoise::cli
