#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace porediff {

namespace detail {
inline int& worker_override() {
    static int value = 0; // 0 = use environment/hardware
    return value;
}
} // namespace detail

/// Number of workers used by parallel loops: the hardware thread count,
/// capped by the RD_THREADS environment variable when set. Always >= 1.
inline int worker_count() {
    if (detail::worker_override() > 0) return detail::worker_override();
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("RD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

/// Programmatic override of the worker count (0 restores the default rule).
/// The override may exceed the hardware thread count; useful for testing
/// that results do not depend on the number of workers.
inline void set_worker_count(int n) { detail::worker_override() = n < 0 ? 0 : n; }

/// Runs f(slot, begin, end) over a partition of [0, n) into one contiguous
/// range per worker; `slot` is the worker's index in [0, worker_count()).
/// With one worker the call is inline (no threads spawned). Workers write to
/// disjoint state; any cross-range reduction is the caller's job and must
/// not depend on worker count.
template <class F>
void parallel_for_slots(std::int64_t n, F&& f) {
    const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), n > 0 ? n : 1));
    if (workers <= 1) {
        if (n > 0) f(0, std::int64_t{0}, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    const std::int64_t block = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = w * block;
        const std::int64_t hi = std::min(n, lo + block);
        if (lo >= hi) break;
        threads.emplace_back([&f, w, lo, hi] { f(w, lo, hi); });
    }
    for (auto& t : threads) t.join();
}

/// Range-only variant of parallel_for_slots.
template <class F>
void parallel_for(std::int64_t n, F&& f) {
    parallel_for_slots(n, [&f](int, std::int64_t lo, std::int64_t hi) { f(lo, hi); });
}

/// Deterministic pairwise (binary-tree) sum of partial values in their given
/// order. The result depends only on the sequence, never on worker count.
template <typename T>
T pairwise_sum(std::vector<T> values) {
    if (values.empty()) return T{0};
    std::size_t n = values.size();
    while (n > 1) {
        const std::size_t half = n / 2;
        for (std::size_t i = 0; i < half; ++i)
            values[i] = values[2 * i] + values[2 * i + 1];
        if (n % 2 == 1) {
            values[half] = values[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    return values[0];
}

} // namespace porediff
