#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace turbsim {

/// Run fn(i) for i in [0, count) across hardware threads.  Work items must
/// write only to disjoint slots; iteration order is unspecified but each
/// index runs exactly once, so seeded-by-index generation is deterministic.
inline void parallel_for(size_t count, const std::function<void(size_t)>& fn,
                         unsigned max_threads = 0) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 4;
    if (max_threads) n = std::min(n, max_threads);
    if (count < 2 || n < 2) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> threads;
    const unsigned nt = static_cast<unsigned>(std::min<size_t>(n, count));
    threads.reserve(nt - 1);
    for (unsigned t = 1; t < nt; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
}

}  // namespace turbsim
