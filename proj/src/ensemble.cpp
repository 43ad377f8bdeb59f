#include "fput/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace fput {

namespace {

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t seed, std::uint64_t realization, long site) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ (realization * 0xA24BAED4963EE407ull + 0x9FB21C651E98DF25ull));
    const std::uint64_t s = static_cast<std::uint64_t>(site) * 0xD6E8FEB86659FD93ull;
    return splitmix(h ^ s);
}

// standard normal quantile (Acklam's rational approximation + one Newton step)
double norm_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double cq[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double dq[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, x;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        x = (((((cq[0] * q + cq[1]) * q + cq[2]) * q + cq[3]) * q + cq[4]) * q + cq[5]) /
            ((((dq[0] * q + dq[1]) * q + dq[2]) * q + dq[3]) * q + 1);
    } else if (p <= 1 - plow) {
        q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((cq[0] * q + cq[1]) * q + cq[2]) * q + cq[3]) * q + cq[4]) * q + cq[5]) /
            ((((dq[0] * q + dq[1]) * q + dq[2]) * q + dq[3]) * q + 1);
    }
    // Newton polish on Phi(x) = p
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    return x - u / (1 + x * u / 2);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }

// Variance of a standard normal truncated to [-T, T].
double trunc_var(double T) {
    const double z = 2 * norm_cdf(T) - 1;
    return 1.0 - 2.0 * T * norm_pdf(T) / z;
}

// Scale T so that the variance-normalized truncated normal has support alpha.
double solve_trunc_T(double alpha) {
    double lo = 1e-3, hi = alpha;  // T/sqrt(var) >= T, so T <= alpha
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid / std::sqrt(trunc_var(mid));
        (f < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t realization, long site) {
    return static_cast<double>(mix3(seed, realization, site) >> 11) * 0x1.0p-53;
}

double kappa_support(const EnsembleConfig& cfg) {
    switch (cfg.law) {
        case KappaLaw::uniform_pm_sqrt3: return std::sqrt(3.0);
        case KappaLaw::rademacher: return 1.0;
        case KappaLaw::truncated_gaussian: return cfg.trunc_alpha;
    }
    return 1.0;
}

double kappa_value(const EnsembleConfig& cfg, std::uint64_t realization, long site) {
    const double u = uniform01(cfg.master_seed, realization, site);
    switch (cfg.law) {
        case KappaLaw::uniform_pm_sqrt3:
            return (2.0 * u - 1.0) * std::sqrt(3.0);
        case KappaLaw::rademacher:
            return u < 0.5 ? -1.0 : 1.0;
        case KappaLaw::truncated_gaussian: {
            static thread_local double cached_alpha = -1, cached_T = 0, cached_scale = 0;
            if (cached_alpha != cfg.trunc_alpha) {
                cached_alpha = cfg.trunc_alpha;
                cached_T = solve_trunc_T(cfg.trunc_alpha);
                cached_scale = 1.0 / std::sqrt(trunc_var(cached_T));
            }
            const double z = 2 * norm_cdf(cached_T) - 1;
            const double pp = norm_cdf(-cached_T) + u * z;
            return cached_scale * norm_quantile(pp);
        }
    }
    return 0.0;
}

SpringCoefficients sample_kappa(const EnsembleConfig& cfg, std::uint64_t realization,
                                const Window& win) {
    const double alpha = kappa_support(cfg);
    if (cfg.sigma * alpha >= 1.0)
        throw Error(ErrorKind::config, "sample_kappa: sigma * alpha must be < 1");
    std::vector<double> kap(win.width);
    for (std::size_t i = 0; i < win.width; ++i)
        kap[i] = kappa_value(cfg, realization, win.j_min + static_cast<long>(i));
    return SpringCoefficients(win.j_min, std::move(kap), cfg.sigma, alpha);
}

EnsembleStats run_ensemble(const EnsembleConfig& cfg, const std::vector<double>& t_grid,
                           const std::vector<std::string>& names, const TrajectoryFn& traj,
                           int threads, double max_fail_fraction) {
    EnsembleStats stats;
    stats.t = t_grid;
    stats.names = names;
    stats.stat.assign(names.size(), std::vector<RunningStats>(t_grid.size()));

    // workers deposit complete trajectories; the merger consumes them strictly
    // in realization order so the accumulated statistics are bit-identical for
    // any thread count
    std::mutex mtx;
    std::condition_variable cv;
    std::vector<std::vector<std::vector<double>>> buffer(cfg.realizations);
    std::vector<char> ready(cfg.realizations, 0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    const std::size_t nw = std::max(1, threads);
    std::vector<std::thread> pool;
    std::exception_ptr err;
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cfg.realizations || stop.load()) return;
                std::vector<std::vector<double>> rows;
                try {
                    rows = traj(static_cast<std::uint64_t>(i));
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::coherence_lost) {
                        stop.store(true);
                        std::lock_guard<std::mutex> lk(mtx);
                        if (!err) err = std::current_exception();
                        cv.notify_all();
                        return;
                    }
                    rows.clear();  // excluded realization
                }
                std::lock_guard<std::mutex> lk(mtx);
                buffer[i] = std::move(rows);
                ready[i] = 1;
                cv.notify_all();
            }
        });
    }

    std::size_t merged = 0;
    {
        std::unique_lock<std::mutex> lk(mtx);
        while (merged < cfg.realizations) {
            cv.wait(lk, [&] { return ready[merged] || err; });
            if (err) break;
            auto rows = std::move(buffer[merged]);
            ready[merged] = 0;
            ++merged;
            if (rows.empty()) {
                ++stats.failed;
                continue;
            }
            if (rows.size() != names.size())
                throw Error(ErrorKind::config, "run_ensemble: trajectory row count mismatch");
            for (std::size_t qi = 0; qi < names.size(); ++qi)
                for (std::size_t ti = 0; ti < t_grid.size(); ++ti)
                    stats.stat[qi][ti].add(rows[qi][ti]);
        }
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    if (static_cast<double>(stats.failed) >
        max_fail_fraction * static_cast<double>(cfg.realizations))
        throw Error(ErrorKind::coherence_lost,
                    "run_ensemble: too many realizations lost wave coherence");
    return stats;
}

}  // namespace fput
