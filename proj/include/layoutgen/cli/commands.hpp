#pragma once

#include <iosfwd>
#include <stdexcept>

namespace layoutgen::cli {

/// Bad flags, config keys or scheme strings (exit code 1).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses `argv` and runs the selected subcommand: gen-data, train, refine,
/// metaopt, eval or render. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace layoutgen::cli
