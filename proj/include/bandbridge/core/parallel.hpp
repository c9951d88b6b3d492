#pragma once

#include <cstddef>
#include <functional>

namespace bandbridge {

// Worker-thread cap from BANDBRIDGE_THREADS. 0 selects sequential
// deterministic mode; unset means hardware concurrency.
std::size_t worker_threads();

// Runs fn(i) for i in [0, n). Sequential when worker_threads() <= 1.
// The first exception thrown by any task is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bandbridge
