#pragma once

#include <string>
#include <vector>

namespace opml::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes are a stable contract for CI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitViolation = 3;

// Run the command-line front end on args (without the program name).
// Exposed as a library call so tests can drive commands in-process.
int run(const std::vector<std::string>& args);

}  // namespace opml::cli
