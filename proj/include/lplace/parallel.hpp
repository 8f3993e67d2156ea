#pragma once

#include <cstddef>
#include <functional>

namespace lplace {

/// Worker count used when a caller passes threads <= 0. Initialized from the
/// LPLACE_THREADS environment variable, else hardware concurrency.
int default_threads();
void set_default_threads(int threads);

/// Splits [0, n) into at most `threads` contiguous chunks and runs
/// fn(begin, end, worker) on each. Chunk boundaries depend only on n and the
/// worker count; callers that need schedule-independent results must merge
/// per-worker outputs with an order-independent operation.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t, int)>& fn);

/// Number of chunks parallel_for will use for (n, threads).
int chunk_count(std::size_t n, int threads);

}  // namespace lplace
