#pragma once

#include <cstddef>
#include <functional>

namespace ndiff {

/// Worker cap: NDIFF_THREADS if set and positive, else the hardware count.
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = worker_count()).
/// fn must not throw.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace ndiff
