#pragma once

// Job-level worker pool. Experiment cells (beta, replicate) are independent
// and carry their own derived seeds, so results never depend on the worker
// count or scheduling; callers write into preallocated slots indexed by job.

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cealab {

inline unsigned default_worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Run fn(0) .. fn(jobs - 1) on up to `workers` threads. The first exception
/// thrown by any job is rethrown on the calling thread after all workers
/// finish.
template <typename Fn>
void parallel_for(std::size_t jobs, unsigned workers, Fn&& fn) {
    if (workers <= 1 || jobs <= 1) {
        for (std::size_t i = 0; i < jobs; ++i)
            fn(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace cealab
