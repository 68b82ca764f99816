#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace trapspec {

// Runs f(i) for i in [0, n) on up to `workers` threads; each index is written
// by exactly one thread, so results do not depend on the worker count.
// f must not throw.
template <class F>
void parallelFor(std::size_t n, int workers, F f) {
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t id = 0; id < w; ++id)
        pool.emplace_back([&, id] {
            for (std::size_t i = id; i < n; i += w) f(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace trapspec
