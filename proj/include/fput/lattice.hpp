#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fput/util.hpp"

namespace fput {

/// State (r, p) of the FPUT chain on a finite integer window [j_min, j_min + W).
/// Sites outside the window are treated as zero by all difference operators.
struct LatticeField {
    long j_min = 0;
    std::vector<double> r;
    std::vector<double> p;

    LatticeField() = default;
    LatticeField(long jmin, std::size_t width) : j_min(jmin), r(width, 0.0), p(width, 0.0) {
        if (width < 3) throw Error(ErrorKind::invalid_window, "lattice window needs >= 3 sites");
    }

    std::size_t size() const { return r.size(); }
    long j_max() const { return j_min + static_cast<long>(size()) - 1; }

    // Site access by lattice index; zero outside the window.
    double r_at(long j) const { return in_window(j) ? r[idx(j)] : 0.0; }
    double p_at(long j) const { return in_window(j) ? p[idx(j)] : 0.0; }
    bool in_window(long j) const { return j >= j_min && j <= j_max(); }
    std::size_t idx(long j) const { return static_cast<std::size_t>(j - j_min); }

    /// Max of |r|,|p| over the `pad` outermost sites on each edge.
    double boundary_mass(std::size_t pad) const;
    bool boundary_negligible(std::size_t pad, double tol = 1e-12) const {
        return boundary_mass(pad) <= tol;
    }

    double l2_norm() const;
    double sup_norm() const;
};

/// Realization of the spring heterogeneity kappa on a window, plus its strength sigma.
struct SpringCoefficients {
    long j_min = 0;
    std::vector<double> kappa;
    double sigma = 0.0;
    double alpha_support = 1.0;  // support half-width of each kappa(j)

    SpringCoefficients() = default;
    SpringCoefficients(long jmin, std::vector<double> k, double sig, double alpha);

    std::size_t size() const { return kappa.size(); }
    long j_max() const { return j_min + static_cast<long>(size()) - 1; }
    double at(long j) const {
        return (j >= j_min && j <= j_max()) ? kappa[static_cast<std::size_t>(j - j_min)] : 0.0;
    }

    static SpringCoefficients zero(long jmin, std::size_t width) {
        return SpringCoefficients(jmin, std::vector<double>(width, 0.0), 0.0, 1.0);
    }
};

// Finite-difference operators with zero extension beyond the sequence.
std::vector<double> diff_forward(const std::vector<double>& f);   // f(j+1) - f(j)
std::vector<double> diff_backward(const std::vector<double>& f);  // f(j) - f(j-1)

/// J = [0, d+; d-, 0]:  (r, p) -> (d+ p, d- r).
LatticeField apply_J(const LatticeField& u);

/// Formal inverse of J via left prefix sums, truncated at the window edge:
/// (r, p) -> (d-^{-1} p, d+^{-1} r).  Requires negligible mass on the left pad.
LatticeField apply_J_inverse(const LatticeField& u, double boundary_tol = 1e-9);

// Prefix-sum primitives (exposed for the symplectic pairings).
std::vector<double> prefix_sum_inclusive(const std::vector<double>& f);  // d-^{-1}
std::vector<double> prefix_sum_strict(const std::vector<double>& f);     // d+^{-1}

/// Right-hand side of the lattice system: (d+ p, d-[(1 + sigma*kappa) r + r^2]).
void fput_rhs(const LatticeField& u, const SpringCoefficients& coeffs, LatticeField& out);
LatticeField fput_rhs(const LatticeField& u, const SpringCoefficients& coeffs);

/// H = sum_j p^2/2 + (1 + sigma*kappa) r^2/2 + r^3/3.
double hamiltonian(const LatticeField& u, const SpringCoefficients& coeffs);

struct IntegrateOptions {
    double dt = 0.05;
    double t_end = 0.0;
    std::size_t observer_stride = 1;          // observer called every `stride` steps (and at t=0, t_end)
    std::vector<double> event_times;          // times hit exactly by shortened steps
    std::size_t nan_check_stride = 100;
};

using Observer = std::function<void(double t, const LatticeField& u)>;

/// Classical RK4 on fput_rhs. Deterministic; throws on NaN/overflow.
LatticeField integrate(const LatticeField& u0, const SpringCoefficients& coeffs,
                       const IntegrateOptions& opt, const Observer& observer = nullptr);

/// Window rule used by the pipelines: [-t_end - pad, ceil(c*t_end) + pad].
struct Window {
    long j_min = 0;
    std::size_t width = 0;
};
Window simulation_window(double c_star, double t_end, long pad = 50);

double inner(const LatticeField& f, const LatticeField& g);

}  // namespace fput
