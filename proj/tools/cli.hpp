#pragma once

#include <iosfwd>

namespace robin::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntime = 1;
inline constexpr int kInfeasible = 2;
inline constexpr int kUsage = 64;

/// Entry point shared by main() and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace robin::cli
