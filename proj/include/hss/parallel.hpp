#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hss {

// Runs fn(i) for i in [0, n). Work items must be independent; callers store
// per-index results and reduce in index order afterwards, so the outcome is
// identical for any thread count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, std::thread::hardware_concurrency() > 0
                                                             ? std::thread::hardware_concurrency() * 2
                                                             : threads);
    std::atomic<std::size_t> next{0};
    const std::size_t chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(workers) * 8));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::mutex error_mu;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t lo = next.fetch_add(chunk);
                if (lo >= n) break;
                const std::size_t hi = std::min(n, lo + chunk);
                try {
                    for (std::size_t i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mu);
                    if (!failed.exchange(true)) error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Mean and standard error of a frozen per-draw value array, reduced in index
// order so results do not depend on scheduling.
struct MeanStdErr {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanStdErr mean_stderr(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) return {};
    double s = 0.0;
    for (double v : values) s += v;
    const double mean = s / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace hss
