// cli.hpp: command-line driver
#pragma once

#include <string>
#include <vector>

namespace tfperf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Runs one command. args excludes the program name. Reports go to --out
/// (stdout by default); diagnostics go to stderr, one line per error.
int run(const std::vector<std::string>& args);

}  // namespace tfperf
