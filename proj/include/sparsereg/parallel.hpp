#pragma once

#include <cstdint>
#include <functional>

namespace sparsereg {

// Global bound on internal parallelism. 0 or negative selects the hardware
// concurrency. Results are bit-identical for any thread count: work is split
// into fixed-size chunks (independent of the thread count) and reductions sum
// per-chunk partials in chunk order.
int max_threads();
void set_max_threads(int threads);

// Runs body(begin, end) over disjoint sub-ranges of [0, count). Sub-range
// boundaries depend only on `grain`, never on the thread count.
void parallel_chunks(std::int64_t count, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& body);

// Deterministic sum: fixed 64k-element chunks, partials added in chunk order.
double chunked_sum(const double* values, std::int64_t count);

}  // namespace sparsereg
