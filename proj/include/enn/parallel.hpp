#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace enn {

inline constexpr const char* thread_count_env = "ENN_NUM_THREADS";

/// Worker count from ENN_NUM_THREADS, defaulting to the hardware concurrency.
[[nodiscard]] inline unsigned configured_threads()
{
    if (const char* v = std::getenv(thread_count_env)) {
        try {
            const long n = std::stol(v);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
            // fall through to the default
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs task(i) for i in [0, count) on up to `threads` workers and returns
/// the results in index order. The first exception (lowest index) is rethrown
/// after all workers finish.
template <typename Result, typename Task>
[[nodiscard]] std::vector<Result> parallel_map(std::size_t count, Task&& task,
                                               unsigned threads = configured_threads())
{
    std::vector<Result> results(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                results[i] = task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1U, threads), count));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

} // namespace enn
