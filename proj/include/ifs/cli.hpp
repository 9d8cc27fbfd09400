#pragma once

#include <iosfwd>

namespace ifs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `ifscreen` tool: subcommands `screen`, `simulate`
/// and `estimate-sigma`. Human-readable output goes to `out`, single-line
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ifs::cli
