// parallel.hpp: bounded index-parallel loops
#pragma once

#include <cstddef>
#include <functional>

namespace tfperf {

/// Worker count: TFPERF_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
unsigned thread_count();

/// Calls fn(i) for i in [0, n) on up to thread_count() threads. Each index runs
/// exactly once; callers write results into per-index slots so the outcome is
/// independent of scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tfperf
