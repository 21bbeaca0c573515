#pragma once

#include <iosfwd>

namespace viewrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime error or failed check
inline constexpr int kExitUsage = 2;

/// Entry point of the viewrank tool. Output goes to `out`, diagnostics to
/// `err`; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace viewrank::cli
