#include "sparsereg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace sparsereg {

namespace {
std::atomic<int> g_max_threads{0};

int resolved_threads() {
    int t = g_max_threads.load(std::memory_order_relaxed);
    if (t <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        t = hw > 0 ? static_cast<int>(hw) : 1;
    }
    return t;
}
}  // namespace

int max_threads() { return resolved_threads(); }

void set_max_threads(int threads) { g_max_threads.store(threads, std::memory_order_relaxed); }

void parallel_chunks(std::int64_t count, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (count <= 0) return;
    if (grain < 1) grain = 1;
    const std::int64_t n_chunks = (count + grain - 1) / grain;
    const int threads = std::min<std::int64_t>(resolved_threads(), n_chunks);

    if (threads <= 1 || n_chunks == 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) {
            body(c * grain, std::min(count, (c + 1) * grain));
        }
        return;
    }

    std::atomic<std::int64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks) break;
            body(c * grain, std::min(count, (c + 1) * grain));
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

double chunked_sum(const double* values, std::int64_t count) {
    constexpr std::int64_t kChunk = 1 << 16;
    if (count <= 0) return 0.0;
    const std::int64_t n_chunks = (count + kChunk - 1) / kChunk;
    std::vector<double> partials(static_cast<std::size_t>(n_chunks), 0.0);
    parallel_chunks(count, kChunk, [&](std::int64_t begin, std::int64_t end) {
        double s = 0.0;
        for (std::int64_t i = begin; i < end; ++i) s += values[i];
        partials[static_cast<std::size_t>(begin / kChunk)] = s;
    });
    double total = 0.0;
    for (double p : partials) total += p;
    return total;
}

}  // namespace sparsereg
