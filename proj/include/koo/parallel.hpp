#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace koo {

/// Runs body(i, worker) for i in [0, count) on up to `workers` threads.
///
/// Work items are handed out dynamically, so `body` must only depend on its
/// index for results to be reproducible. The first exception thrown by any
/// worker is rethrown on the calling thread after all workers have joined.
template <typename Body>
void parallel_for(Eigen::Index count, int workers, Body&& body)
{
    if (count <= 0) return;
    const int threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (threads == 1) {
        for (Eigen::Index i = 0; i < count; ++i) body(i, 0);
        return;
    }

    std::atomic<Eigen::Index> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&](int worker) {
        for (;;) {
            const Eigen::Index i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                body(i, worker);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int w = 1; w < threads; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace koo
