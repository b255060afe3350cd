#pragma once

#include <iosfwd>

namespace jan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Parses argv[1] as a subcommand and runs it. Normal output goes to `out`,
/// diagnostics and usage text to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace jan::cli
