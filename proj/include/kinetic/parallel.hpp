#pragma once

#include <cstddef>
#include <functional>

namespace kinetic {

// Worker count used when a caller passes jobs <= 0: KINETIC_JOBS if set,
// otherwise hardware concurrency.
int default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads with static contiguous
// chunks.  Each index is processed exactly once by one thread, so results
// written per index are independent of the thread count.  The first exception
// thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace kinetic
