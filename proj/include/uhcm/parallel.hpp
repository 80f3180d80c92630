#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace uhcm {

inline int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : static_cast<int>(hw);
}

/// Static block partition of [0, n). fn(begin, end) runs on each worker;
/// callers write results into per-index slots, so no reduction order issues.
template <typename Fn>
void parallel_for_blocks(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 0) threads = default_threads();
    if (threads <= 1 || n < 64) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        const std::size_t b = std::min(n, static_cast<std::size_t>(w) * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b < e) pool.emplace_back(fn, b, e);
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace uhcm
