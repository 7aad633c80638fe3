#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bwf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

// Runs one command line (program name excluded) and returns the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bwf::cli
