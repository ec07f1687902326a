#pragma once

#include <cstddef>
#include <functional>

namespace hanslens {

// Worker count: HANSLENS_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
std::size_t thread_count();

// Calls fn(i) for i in [0, n) across up to thread_count() threads. Results
// must be written to per-index slots. The exception of the lowest failing
// index is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hanslens
