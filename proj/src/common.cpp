// SPDX-License-Identifier: Apache-2.0

#include "cvs/common.hpp"

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>

namespace cvs {

int worker_count() {
    static int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        if (const char* env = std::getenv("CVSHEET_THREADS")) {
            int cap = std::atoi(env);
            if (cap >= 1 && cap < n) n = cap;
        }
        return n;
    }();
    return cached;
}

void parallel_for(Index n, const std::function<void(Index)>& fn) {
    const int workers = worker_count();
    if (workers <= 1 || n < 16) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    auto body = [&] {
        for (;;) {
            Index i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int k = static_cast<int>(std::min<Index>(workers, n));
    pool.reserve(k - 1);
    for (int t = 0; t < k - 1; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
}

}  // namespace cvs
