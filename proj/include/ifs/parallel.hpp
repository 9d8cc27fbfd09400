#pragma once

#include <cstddef>
#include <functional>

namespace ifs {

/// Environment variable that overrides every worker-count request.
inline constexpr const char* kWorkersEnv = "IFSCREEN_WORKERS";

/// Resolves a worker count. `requested == 0` means "hardware concurrency".
/// A positive integer in IFSCREEN_WORKERS takes precedence over both.
std::size_t resolve_workers(std::size_t requested);

/// Runs body(i) for i in [0, count) on up to `workers` threads using static
/// contiguous chunks. The first exception thrown (lowest chunk) is rethrown
/// after all threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace ifs
