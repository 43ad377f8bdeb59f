#include "fput/util.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

namespace fput {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads) {
    if (threads < 1) threads = 1;
    const std::size_t nthreads = std::min<std::size_t>(threads, n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr err;
    std::mutex err_mtx;
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double d = n * sxx - sx * sx;
    LineFit f;
    if (d != 0.0) {
        f.slope = (n * sxy - sx * sy) / d;
        f.intercept = (sy - f.slope * sx) / n;
    }
    return f;
}

}  // namespace fput
