#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace btforge {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitGoalMissed = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `btforge` tool. `args` excludes the program name.
/// Subcommands: learn, run, simplify, render, eval.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace btforge
