#pragma once

#include "fput/tail.hpp"

namespace fput {

/// Deterministic correlations M^{1,0}_{I..IV} with their periodic/transient
/// decomposition (xi = n + p; the periodic part is the n -> infinity limit).
struct CorrelationSplit {
    Vec2 total_I, total_II, total_III, total_IV;
    Vec2 periodic;   // sum over I..IV
    Vec2 transient;  // sum over I..IV
    Vec2 total() const {
        return total_I + total_II + total_III + total_IV;
    }
    double xi = 0, c = 0;
};

CorrelationSplit M10_correlations(const ProfileFamily& fam, double xi, double c);

/// M^{1,1}[R] and M^{0,2}[Ra, Rb] summed over heterogeneity sites of a
/// limiting response block (the wave sits at phase p).
struct MMaps {
    Vec2 M11;
    Vec2 M02;
};
MMaps M_maps(const ProfileFamily& fam, const LimitResponse& Ra, const LimitResponse& Rb);

/// Snapshot of the response field R(., ., t) in the lab frame.
struct ResponseSnapshot {
    double t = 0, c_star = 0;
    TailVariant variant = TailVariant::full;
    long j0 = 0, m0 = 0;
    std::size_t W = 0, M = 0;
    std::vector<double> vr, vp;  // [m][j]
};
ResponseSnapshot response_field(const ProfileFamily::Tables& tables, double c_star,
                                TailVariant variant, double dt, double t);

/// E[(gamma2_bar_dot, c2_bar_dot)](t) = M^{1,0}(c*t) + M^{0,2}[R,R] + M^{1,1}[R].
Vec2 expected_drift(const ProfileFamily& fam, double t, double c_star, TailVariant variant,
                    double dt = 0.05);
Vec2 expected_drift_from_snapshot(const ProfileFamily& fam, const ResponseSnapshot& R);

struct AttenuationRate {
    double c = 0;
    double Q_gamma = 0, Q_c = 0;
    TailVariant variant = TailVariant::full;
    int p_samples = 0;
    std::vector<double> p_grid;
    std::vector<double> integrand_gamma, integrand_c;  // per-p values
    double doubled_check_rel = 0;  // |Q_c(2P) - Q_c(P)| / |Q_c|
};

/// Phase-averaged asymptotic drift (Q_gamma, Q_c)(c); the p-integrand is
/// evaluated on the doubled grid as a quadrature convergence check.
AttenuationRate attenuation_rate(const ProfileFamily& fam, double c, TailVariant variant,
                                 int p_samples = 8, const LimitOptions& lopt = {});

/// Slow-time ODE cdot = Q_c(c) integrated with a cubic spline of the rate
/// table in log(c - 1); c is clipped (with a flag) at the table edges.
struct RateTable {
    std::vector<double> c, Q_c;  // ascending in c
};
struct LimitOdePath {
    std::vector<double> tau, c_lim;
    bool clipped = false;
};
LimitOdePath integrate_limit_ode(const RateTable& table, double c_star, double tau_end,
                                 double dtau = 1e-3);

}  // namespace fput
