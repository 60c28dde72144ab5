#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lpn {

/// Run fn(i) for i in [0, n) on up to `jobs` threads. Work is split into
/// contiguous static chunks; callers that need deterministic aggregation
/// write per-index results and reduce in index order afterwards.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (n == 0) return;
    const auto workers = std::min<std::size_t>(std::max(jobs, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        threads.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace lpn
