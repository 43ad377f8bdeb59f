#pragma once

#include <cstdint>
#include <string>

#include "fput/lattice.hpp"

namespace fput {

enum class KappaLaw { uniform_pm_sqrt3, rademacher, truncated_gaussian };

struct EnsembleConfig {
    KappaLaw law = KappaLaw::uniform_pm_sqrt3;
    double trunc_alpha = 2.0;  // support half-width of the truncated gaussian
    double sigma = 0.0;
    double c_star = 1.015;
    std::size_t realizations = 0;
    std::uint64_t master_seed = 0;
};

/// Stateless counter-based draw: the value at (seed, realization, site) never
/// depends on evaluation order or window size.
double kappa_value(const EnsembleConfig& cfg, std::uint64_t realization, long site);
double uniform01(std::uint64_t seed, std::uint64_t realization, long site);

double kappa_support(const EnsembleConfig& cfg);  // alpha of the law

SpringCoefficients sample_kappa(const EnsembleConfig& cfg, std::uint64_t realization,
                                const Window& win);

/// Online mean/variance accumulator (Welford), merged in realization order.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0, m2 = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderror() const {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

struct EnsembleStats {
    std::vector<double> t;                        // shared grid
    std::vector<std::string> names;               // tracked quantities
    std::vector<std::vector<RunningStats>> stat;  // [quantity][time]
    std::size_t failed = 0;                       // coherence-lost realizations
};

/// Runs `realizations` trajectories in parallel and merges per-time statistics
/// in realization order (bit-identical for any thread count). The trajectory
/// function returns one row per grid time per tracked quantity, or an empty
/// result to signal a failed (excluded) realization.
using TrajectoryFn =
    std::function<std::vector<std::vector<double>>(std::uint64_t realization)>;

EnsembleStats run_ensemble(const EnsembleConfig& cfg, const std::vector<double>& t_grid,
                           const std::vector<std::string>& names, const TrajectoryFn& traj,
                           int threads, double max_fail_fraction = 0.01);

}  // namespace fput
