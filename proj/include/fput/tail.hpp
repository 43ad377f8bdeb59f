#pragma once

#include <functional>

#include "fput/expansion.hpp"

namespace fput {

struct TailPoint {
    double t = 0;
    double l2 = 0;
    double ortho_dxi = 0, ortho_dc = 0;  // full variant only
};

/// RK4 for the linear tail eta_bar: etadot = J A_{c*t,c*} eta + T^{1,0}(c*t,c*)[kappa]
/// from zero initial data, unit forcing (the sigma-normalized convention).
/// A is the soliton linearization L (full) or the identity (homogeneous).
LatticeField integrate_tail(const ProfileFamily::Tables& tables,
                            const SpringCoefficients& coeffs, double c_star, TailVariant variant,
                            double dt, double t_end, const Window& win,
                            const std::function<void(double, const LatticeField&)>& observer =
                                nullptr,
                            std::size_t observer_stride = 20);

/// Homogeneous evolution w(t) = U_{c*}(t_end, t_start) w0 (no forcing); used by
/// the shift-equivariance and weighted-stability checks.
LatticeField evolve_linearized(const ProfileFamily::Tables& tables, double c_star,
                               TailVariant variant, const LatticeField& w0, double t_start,
                               double t_end, double dt);

/// Response to a single spring heterogeneity: forcing T^{1,0}(c*t,c*)[delta_m].
LatticeField response(long m, const ProfileFamily::Tables& tables, double c_star,
                      TailVariant variant, double dt, double t_end, const Window& win);

/// Co-moving limit R_inf(j, m, p) on the truncated block j, m in [-Jmax, Jmax].
struct LimitResponse {
    TailVariant variant = TailVariant::full;
    double c_star = 0;
    double p = 0;
    double a = 0;  // weight of the l2_a norm
    long Jmax = 0;
    std::vector<double> vr, vp;  // index (m + Jmax) * (2 Jmax + 1) + (j + Jmax)

    int n_converged = 0;
    double rate_q = 0;                // fitted geometric rate per unit shift
    std::vector<double> shift_n;      // snapshot shifts used
    std::vector<double> distances;    // successive weighted distances
    double edge_mass_ratio = 0;       // weighted mass of outer j-rows / total

    long side() const { return 2 * Jmax + 1; }
    double R_r(long j, long m) const { return vr[idx(j, m)]; }
    double R_p(long j, long m) const { return vp[idx(j, m)]; }
    std::size_t idx(long j, long m) const {
        return static_cast<std::size_t>((m + Jmax) * side() + (j + Jmax));
    }
    double weighted_norm() const;
};

struct LimitOptions {
    double tol = 1e-8;
    int n0 = 6;
    int dn = 4;
    int n_cap = 0;  // 0 = Jmax + 90 (the initialization transient leaves the
                    // truncated co-moving window at shifts ~ Jmax + support)
    long Jmax = 0;  // 0 = 40/eps + light-cone margin
    double dt = 0.05;
};

/// One response-batch integration yielding the limit at every phase in p_grid
/// (snapshots R(.+n, .+n, (n+p)/c*) until successive weighted distances fall
/// below tol; geometric rate fitted from the distance sequence).
std::vector<LimitResponse> response_limit_grid(const ProfileFamily::Tables& tables, double c_star,
                                               TailVariant variant,
                                               const std::vector<double>& p_grid,
                                               const LimitOptions& opt = {});
LimitResponse response_limit(const ProfileFamily::Tables& tables, double c_star, double p,
                             TailVariant variant, double tol);

/// Independent oracle for the homogeneous variant: direct quadrature of the
/// Duhamel integral with the explicit Bessel kernel.
LimitResponse homogeneous_limit_quadrature(const ProfileFamily::Tables& tables, double c_star,
                                           double p, long Jmax, double dtau = 0.02);

/// Sample and pointwise standard deviation of the limiting tail eta_inf on the
/// x-grid {j - p : j integer, p in the phase grid of Rset}.
struct LimitTailCurves {
    std::vector<double> x;
    std::vector<double> r, p;          // one realization
    std::vector<double> std_r, std_p;  // pointwise standard deviation
};
LimitTailCurves limiting_tail(const std::vector<LimitResponse>& Rset,
                              const std::function<double(long)>& zeta, long j_lo, long j_hi);

/// Joint integration of the linear tail with the second-order corrections
/// (gamma2_bar, c2_bar); stage values of eta_bar are exact, no grid
/// interpolation. Backs expansion::second_order_path.
ExpansionRun tail_with_corrections(const ProfileFamily& fam, const SpringCoefficients& coeffs,
                                   double c_star, TailVariant variant, double dt, double t_end,
                                   std::size_t grid_stride,
                                   const std::function<void(double, const LatticeField&)>&
                                       eta_observer = nullptr);

}  // namespace fput
