#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace icd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand. `args` excludes the program name. Output files land
/// under --out; progress goes to `err` with --verbose.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace icd::cli
