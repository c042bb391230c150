#pragma once

#include <cstddef>
#include <functional>

namespace mpemba {

// MPEMBA_THREADS if set to a positive integer, else the hardware concurrency.
std::size_t worker_count();

// Runs fn(0..n-1) on up to `workers` threads (0 = worker_count()). Work is
// handed out by index, so results written per index do not depend on the
// thread count. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = 0);

}  // namespace mpemba
