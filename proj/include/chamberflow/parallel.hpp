#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace chamberflow {

/// Worker count: CHAMBERFLOW_THREADS if set to a positive integer, else the
/// hardware concurrency. Results never depend on this value.
inline int default_workers() {
    if (const char* env = std::getenv("CHAMBERFLOW_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on `workers` threads. Each index is handled
/// exactly once; callers write into per-index slots and reduce afterwards in
/// index order, so output is independent of scheduling.
template <class F>
void parallel_for(std::size_t count, int workers, F&& fn) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::size_t>(count, 1024))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
    }
    if (error) std::rethrow_exception(error);
}

} // namespace chamberflow
