#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace singlab {

// Run fn(i) for i in [0, n) across a static partition of `threads` workers.
// Each index writes only to its own pre-allocated slot, so results are
// byte-identical for any thread count; the partition only changes who
// computes what. The first exception thrown by any worker is rethrown.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (std::size_t w = 0; w < nt; ++w) {
        std::size_t lo = n * w / nt, hi = n * (w + 1) / nt;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace singlab
