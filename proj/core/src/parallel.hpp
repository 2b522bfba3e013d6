#pragma once

// Static-partition parallel loop. Each index is handled by exactly one
// thread and results are written by index, so output does not depend on the
// thread count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace curvedhho::detail {

inline std::size_t worker_count(std::size_t n)
{
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return std::min(hw, std::max<std::size_t>(1, n / 16));
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const std::size_t workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::size_t error_index = n;
    std::mutex mtx;
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    // Report the failure with the lowest index, as a serial loop would.
                    std::lock_guard<std::mutex> lock(mtx);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace curvedhho::detail
