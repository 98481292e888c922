#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace specpoll
{

/// Worker count: hardware concurrency, capped by SPECPOLL_WORKERS when set.
inline std::size_t worker_count()
{
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SPECPOLL_WORKERS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1)
                n = std::min(n, static_cast<std::size_t>(cap));
        }
        catch (const std::exception&) {
            // unparsable values are ignored
        }
    }
    return n;
}

/// Evaluates fn(i) for i in [0, count) on a small pool; results keep their
/// index order. The first exception (by index) is rethrown after all workers join.
template <class Fn>
auto parallel_map(std::size_t count, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using Result = decltype(fn(std::size_t{}));
    std::vector<Result> results(count);
    std::vector<std::exception_ptr> errors(count);
    const std::size_t workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                results[i] = fn(i);
            }
            catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

} // namespace specpoll
