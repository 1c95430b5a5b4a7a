#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qnd {

// Runs fn(begin, end) over disjoint chunks of [0, n). Callers write results
// into preallocated slots indexed by position, so the output is identical to
// a serial loop regardless of thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t min_chunk = 1024) {
    if (n == 0) return;
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw < 2 || n < 2 * min_chunk) {
        fn(0, n);
        return;
    }
    std::size_t n_threads = std::min(hw, n / min_chunk);
    std::size_t chunk = (n + n_threads - 1) / n_threads;
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        std::size_t begin = t * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back(fn, begin, end);
    }
    for (auto& w : workers) w.join();
}

}
