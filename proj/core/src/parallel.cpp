// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/parallel.h"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace scatterfield {

namespace {

int default_cap() {
    if (const char* env = std::getenv("SCATTERFIELD_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::atomic<int> g_cap{0};

}  // namespace

int thread_cap() {
    int cap = g_cap.load(std::memory_order_relaxed);
    if (cap == 0) {
        cap = default_cap();
        g_cap.store(cap, std::memory_order_relaxed);
    }
    return cap;
}

void set_thread_cap(int n) { g_cap.store(n > 0 ? n : 1, std::memory_order_relaxed); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    int workers = thread_cap();
    if (workers > n) workers = static_cast<int>(n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    const int64_t chunk = std::max<int64_t>(1, n / (workers * 16));
    auto body = [&] {
        for (;;) {
            int64_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
            if (begin >= n) break;
            int64_t end = std::min(n, begin + chunk);
            for (int64_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 0; t < workers - 1; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
}

}  // namespace scatterfield
