#pragma once

#include <cstddef>
#include <functional>

namespace helidiff {

/// Worker count used by data-parallel loops. Defaults to the HELIDIFF_THREADS
/// environment variable, else std::thread::hardware_concurrency().
int thread_count();

/// Overrides the worker count for the rest of the process (0 restores the
/// default).
void set_thread_count(int n);

/// Calls body(begin, end) on disjoint contiguous chunks covering [0, n).
/// Chunk boundaries depend on the thread count, so bodies must only write
/// to per-index state; every result must be independent of the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace helidiff
