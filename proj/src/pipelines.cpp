#include "fput/pipelines.hpp"

#include <algorithm>
#include <cmath>

#include "fput/modulation.hpp"

namespace fput {

ProfileFamily make_family(double c_star, double below, double above, int nodes) {
    ProfileFamily::Config cfg;
    cfg.c_lo = std::max(1.0015, c_star - below);
    cfg.c_hi = std::min(1.1, c_star + above);
    cfg.nodes = nodes;
    return ProfileFamily(cfg);
}

FitTrajectory simulate_and_fit(const ProfileFamily& fam, const ProfileSolution& exact_profile,
                               const SpringCoefficients& coeffs, double c_star,
                               const SimulateOptions& opt) {
    const Window win{coeffs.j_min, coeffs.size()};
    LatticeField u0 = exact_profile.sample_lattice(0.0, win);

    FitTrajectory out;
    double guess_xi = 0.0, guess_c = c_star;
    std::size_t next_fit = 0;

    auto fit_due = [&](double t) {
        if (!opt.fit_times.empty()) {
            if (next_fit >= opt.fit_times.size()) return false;
            if (std::abs(t - opt.fit_times[next_fit]) > 1e-9) return false;
            ++next_fit;
            return true;
        }
        return out.t.empty() || t - out.t.back() >= opt.fit_stride - 1e-9;
    };

    auto fit_observer = [&](double t, const LatticeField& u) {
        if (!fit_due(t)) return;
        // chain the guess from the previous fit, advanced at the fitted speed
        const double ahead = out.t.empty() ? 0.0 : t - out.t.back();
        FitResult fit = fit_modulation(u, guess_xi + guess_c * ahead, guess_c, fam);
        guess_xi = fit.xi;
        guess_c = fit.c;
        out.t.push_back(t);
        out.c.push_back(fit.c);
        out.xi.push_back(fit.xi);
        out.eta_l2.push_back(fit.eta_l2);
        out.eta_weighted.push_back(fit.eta_weighted);
        out.ortho_dxi.push_back(fit.resid_dxi);
        out.ortho_dc.push_back(fit.resid_dc);
    };

    IntegrateOptions iopt;
    iopt.dt = opt.dt;
    iopt.t_end = opt.t_end;
    iopt.observer_stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(opt.fit_stride / opt.dt)));
    iopt.event_times = opt.snapshot_times;
    for (double ft : opt.fit_times)
        if (ft > 0) iopt.event_times.push_back(ft);

    const auto& snap_times = opt.snapshot_times;
    auto observer = [&](double t, const LatticeField& u) {
        if (opt.snapshot_sink) {
            for (double ts : snap_times)
                if (std::abs(ts - t) < 1e-9) opt.snapshot_sink(t, u);
        }
        fit_observer(t, u);
    };

    integrate(u0, coeffs, iopt, observer);

    // gamma = xi - int c dt, trapezoid on the fit grid
    out.gamma.resize(out.t.size());
    double acc = 0;
    for (std::size_t i = 0; i < out.t.size(); ++i) {
        if (i > 0) acc += 0.5 * (out.c[i] + out.c[i - 1]) * (out.t[i] - out.t[i - 1]);
        out.gamma[i] = out.xi[i] - acc;
    }
    return out;
}

}  // namespace fput
