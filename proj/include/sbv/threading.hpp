#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace sbv {

/// Resolve a user thread count: 0 means "use the hardware".
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(begin, end) over [0, n) split into contiguous chunks, one per worker.
/// Chunk boundaries depend only on n and the resolved thread count, and every
/// chunk writes disjoint output, so results are identical for any thread count.
template <typename Fn>
void parallel_chunks(int n, int threads, Fn&& fn) {
    threads = std::min(resolve_threads(threads), std::max(n, 1));
    if (n <= 0) return;
    if (threads <= 1) {
        fn(0, n);
        return;
    }
    const int chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        const int b = t * chunk;
        const int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace sbv
