#pragma once

#include <iosfwd>

namespace ndiff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitPartial = 5;

inline constexpr const char* kVersion = "0.1.0";

/// Entry point shared by the binary and the tests. Subcommands: diff, tune,
/// simulate, bench, spectrum, methods.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ndiff::cli
