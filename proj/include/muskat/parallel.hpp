#pragma once
#include <cstddef>
#include <functional>

namespace muskat {

// Worker count from MUSKAT_WORKERS (default: hardware concurrency, at least 1).
int worker_count();

// Splits [0, count) into contiguous chunks, one per worker, and runs
// body(begin, end) on each. Chunks never overlap, so disjoint writes are safe.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body,
                  int workers = 0);

}  // namespace muskat
