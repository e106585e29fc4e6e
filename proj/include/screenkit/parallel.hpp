#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace screenkit {

/// Worker count: `requested` if positive, else the hardware concurrency.
inline int worker_count(int requested, int tasks)
{
    int w = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, std::min(w, tasks));
}

/// Runs fn(i) for i in [0, count). Tasks must write only to their own slot;
/// the first exception (lowest index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(int count, Fn&& fn, int threads = 0)
{
    if (count <= 0)
        return;
    const int workers = worker_count(threads, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i)
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < count; i = next++)
                    try {
                        fn(i);
                    } catch (...) {
                        errors[static_cast<std::size_t>(i)] = std::current_exception();
                    }
            });
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace screenkit
