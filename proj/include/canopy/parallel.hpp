#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace canopy {

// Worker count: explicit request, else CANOPY_THREADS, else hardware.
inline unsigned effective_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CANOPY_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Static chunked parallel loop. Each index must be independent and write only
// its own output slot, which keeps results identical across thread counts.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    const unsigned t = std::min<std::size_t>(effective_threads(threads), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(t);
    for (unsigned w = 0; w < t; ++w) {
        const std::size_t lo = n * w / t;
        const std::size_t hi = n * (w + 1) / t;
        workers.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (std::thread& w : workers) w.join();
}

} // namespace canopy
