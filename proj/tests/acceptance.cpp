// Acceptance suite: one section per numbered criterion, each printing a
// PASS/FAIL line with the measured numbers. Exit status 0 iff all selected
// criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "fput/bessel.hpp"
#include "fput/pipelines.hpp"

using namespace fput;

namespace {

int g_failures = 0;
std::vector<std::string> g_lines;

void report(int id, bool pass, const std::string& detail) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "CRITERION %2d: %s  %s", id, pass ? "PASS" : "FAIL",
                  detail.c_str());
    std::puts(buf);
    std::fflush(stdout);
    g_lines.push_back(buf);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[400];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_profiles() {
    bool pass = true;
    std::string detail;
    double worst_res = 0, worst_time = 0;
    for (double c : {1.005, 1.015, 1.03}) {
        const auto tic = std::chrono::steady_clock::now();
        auto sol = solve_profile(c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
        worst_res = std::max(worst_res, sol.residual);
        worst_time = std::max(worst_time, secs);
        pass = pass && sol.residual <= 1e-9 && secs <= 10.0;
    }
    // KdV shape at decreasing speeds
    double prev = 1e300;
    double dist_smallest = 0;
    bool monotone = true;
    for (double c : {1.03, 1.015, 1.005, 1.0005}) {
        auto sol = solve_profile(c);
        const double amp = sq(sol.epsilon) / 8.0;
        double dist = 0;
        for (double x = 0; x <= 30.0 / sol.epsilon; x += 0.25)
            dist = std::max(dist,
                            std::abs(sol.eval_r(x) - amp / sq(std::cosh(0.5 * sol.epsilon * x))));
        const double rel = dist / amp;
        monotone = monotone && rel < prev;
        prev = rel;
        if (c == 1.0005) dist_smallest = rel;
    }
    pass = pass && monotone && dist_smallest <= 0.15;
    report(1, pass,
           fmt("advance-delay residual max %.2e (tol 1e-9); KdV rel-dist %.3f at c=1.0005 "
               "(tol 0.15, decreasing toward 1: %s); slowest solve %.1fs (tol 10s)",
               worst_res, dist_smallest, monotone ? "yes" : "no", worst_time));
}

// ---------------------------------------------------------------- criterion 2
void criterion_energy() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015, t_end = 100.0;
    const Window win{-1500, 3000};
    EnsembleConfig ec;
    ec.master_seed = 314159;
    ec.sigma = 0.07;
    auto coeffs = sample_kappa(ec, 0, win);
    auto prof = solve_profile(c_star);
    LatticeField u0 = prof.sample_lattice(0.0, win);
    const double h0 = hamiltonian(u0, coeffs);

    IntegrateOptions opt;
    opt.dt = 0.05;
    opt.t_end = t_end;
    const double h1 = hamiltonian(integrate(u0, coeffs, opt), coeffs);
    const double drift = std::abs(h1 - h0) / std::abs(h0);
    opt.dt = 0.025;
    const double h2 = hamiltonian(integrate(u0, coeffs, opt), coeffs);
    const double drift_half = std::abs(h2 - h0) / std::abs(h0);
    const double ratio = drift / std::max(drift_half, 1e-300);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();

    const bool pass = drift <= 1e-8 && ratio >= 12.0 && ratio <= 20.0 && secs <= 30.0;
    report(2, pass,
           fmt("relative drift %.2e (tol 1e-8); halving ratio %.1f (range [12,20]); %.0fs "
               "(tol 30s)",
               drift, ratio, secs));
}

// ---------------------------------------------------------------- criterion 3
void criterion_propagator() {
    const long jmin = -60;
    const std::size_t W = 121;
    LatticeField u0(jmin, W);
    for (std::size_t i = 0; i < W; ++i) {
        const double x = static_cast<double>(jmin + static_cast<long>(i));
        u0.r[i] = std::exp(-x * x / 6.0);
        u0.p[i] = 0.5 * x * std::exp(-x * x / 8.0);
    }
    auto kern = propagate_free(u0, 10.0);
    // independent oracle: RK4 of udot = J u at small dt
    LatticeField u = u0;
    const double dt = 0.005;
    for (int s = 0; s < 2000; ++s) {
        auto k1 = apply_J(u);
        LatticeField t1 = u, t2 = u, t3 = u;
        for (std::size_t i = 0; i < W; ++i) {
            t1.r[i] += 0.5 * dt * k1.r[i];
            t1.p[i] += 0.5 * dt * k1.p[i];
        }
        auto k2 = apply_J(t1);
        for (std::size_t i = 0; i < W; ++i) {
            t2.r[i] += 0.5 * dt * k2.r[i];
            t2.p[i] += 0.5 * dt * k2.p[i];
        }
        auto k3 = apply_J(t2);
        for (std::size_t i = 0; i < W; ++i) {
            t3.r[i] += dt * k3.r[i];
            t3.p[i] += dt * k3.p[i];
        }
        auto k4 = apply_J(t3);
        for (std::size_t i = 0; i < W; ++i) {
            u.r[i] += dt / 6.0 * (k1.r[i] + 2 * k2.r[i] + 2 * k3.r[i] + k4.r[i]);
            u.p[i] += dt / 6.0 * (k1.p[i] + 2 * k2.p[i] + 2 * k3.p[i] + k4.p[i]);
        }
    }
    double diff2 = 0;
    for (std::size_t i = 0; i < W; ++i)
        diff2 += sq(kern.r[i] - u.r[i]) + sq(kern.p[i] - u.p[i]);
    const double l2 = std::sqrt(diff2);

    double unit = 0;
    for (double t : {1.0, 5.0, 20.0}) unit = std::max(unit, WaveKernel(t).unitarity_defect());

    const bool pass = l2 <= 1e-6 && unit <= 1e-10;
    report(3, pass, fmt("kernel-vs-RK4 l2 %.2e (tol 1e-6); unitarity defect %.2e (tol 1e-10)",
                        l2, unit));
}

// ---------------------------------------------------------------- criterion 4
void criterion_equivalence() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015, sigma = 0.07, t_end = 200.0;
    auto fam = make_family(c_star);
    auto prof = solve_profile(c_star);
    Window win = simulation_window(c_star, t_end, 50);
    win.j_min -= 90;
    win.width += 180;
    EnsembleConfig ec;
    ec.master_seed = 99;
    ec.sigma = sigma;
    auto coeffs = sample_kappa(ec, 0, win);

    SimulateOptions sopt;
    sopt.t_end = t_end;
    auto fit = simulate_and_fit(fam, prof, coeffs, c_star, sopt);

    ModulationState init;
    init.c = c_star;
    init.eta = LatticeField(win.j_min, win.width);
    std::vector<double> mt, mc, mg;
    integrate_modulation(init, coeffs, fam, 0.05, t_end,
                         [&](const ModObserverPoint& p) {
                             mt.push_back(p.t);
                             mc.push_back(p.c);
                             mg.push_back(p.gamma);
                         },
                         10);
    double dc = 0, dg = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < fit.t.size(); ++i) {
        while (k + 1 < mt.size() && mt[k] < fit.t[i] - 1e-9) ++k;
        if (std::abs(mt[k] - fit.t[i]) > 1e-9) continue;
        dc = std::max(dc, std::abs(fit.c[i] - mc[k]));
        dg = std::max(dg, std::abs(fit.gamma[i] - mg[k]));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    const bool pass = dc <= 5e-4 && dg <= 5e-3 && secs <= 300.0;
    report(4, pass,
           fmt("max|c_fit-c_mod| %.2e (tol 5e-4); max|gamma_fit-gamma_mod| %.2e (tol 5e-3); "
               "%.0fs (tol 300s)",
               dc, dg, secs));
}

// ---------------------------------------------------------------- criterion 5
void criterion_first_order_stats(bool echo_bits, std::string* bits) {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.003, 0.003, 9);
    auto tab = fam.tables_at(c_star);
    const Window win{-120, 361};
    EnsembleConfig ec;
    ec.master_seed = 271828;

    double l4 = 0;
    for (long j = -200; j <= 200; ++j)
        l4 += std::pow(tab->eval(Fn::r, static_cast<double>(j)), 4);
    const double var_bound = l4 / (sq(c_star) * sq(tab->alpha0));

    bool pass = true;
    std::string detail;
    std::vector<double> g1_times = {5, 15, 30, 50, 80};
    std::vector<RunningStats> g1(g1_times.size());
    for (double tt : {10.0, 50.0}) {
        RunningStats rs;
        for (int q = 0; q < 1000; ++q) {
            auto coeffs = sample_kappa(ec, q, win);
            FirstOrderEval ev(tab, coeffs, c_star);
            rs.add(ev.c1(tt));
            if (tt == 10.0)
                for (std::size_t g = 0; g < g1_times.size(); ++g)
                    g1[g].add(ev.gamma1_I(g1_times[g]) + ev.gamma1_II(g1_times[g]));
        }
        const double var = c1_covariance(*tab, c_star, tt, tt);
        const double se_var = var * std::sqrt(2.0 / 999.0);
        const bool mean_ok = std::abs(rs.mean) <= 3.0 * rs.stderror();
        const bool var_ok = std::abs(rs.variance() - var) <= 3.0 * se_var;
        const bool bound_ok = rs.variance() <= var_bound * (1 + 1e-12);
        pass = pass && mean_ok && var_ok && bound_ok;
        detail += fmt("t=%g: |mean|/SE %.2f, var dev/SE %.2f, var<=bound %s; ", tt,
                      std::abs(rs.mean) / rs.stderror(),
                      std::abs(rs.variance() - var) / se_var, bound_ok ? "yes" : "no");
        if (echo_bits && bits) {
            char b[64];
            std::snprintf(b, sizeof(b), "%a %a|", rs.mean, rs.m2);
            *bits += b;
        }
    }
    // gamma1 sample variance below an affine bound with fitted constants
    std::vector<double> vars;
    for (auto& s : g1) vars.push_back(s.variance());
    const LineFit fitl = fit_line(g1_times, vars);
    bool affine_ok = fitl.slope > 0;
    for (std::size_t g = 0; g < g1_times.size(); ++g) {
        const double bound = 1.25 * (std::abs(fitl.intercept) + fitl.slope * g1_times[g]);
        affine_ok = affine_ok && vars[g] <= bound;
    }
    pass = pass && affine_ok;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    pass = pass && secs <= 60.0;
    report(5, pass, detail + fmt("gamma1 affine bound %s; %.0fs (tol 60s)",
                                 affine_ok ? "holds" : "violated", secs));
}

// ---------------------------------------------------------------- criterion 6
void criterion_variant_proximity() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015, t_end = 300.0;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto tab = fam.tables_at(c_star);
    Window win = simulation_window(c_star, t_end, 100);
    EnsembleConfig ec;
    ec.master_seed = 161803;
    auto coeffs = sample_kappa(ec, 0, win);

    std::vector<double> grid;
    std::vector<LatticeField> snaps;
    integrate_tail(*tab, coeffs, c_star, TailVariant::full, 0.05, t_end, win,
                   [&](double t, const LatticeField& eta) {
                       grid.push_back(t);
                       snaps.push_back(eta);
                   },
                   40);
    double worst = 0;
    std::size_t k = 0;
    integrate_tail(*tab, coeffs, c_star, TailVariant::homogeneous, 0.05, t_end, win,
                   [&](double t, const LatticeField& etah) {
                       if (k >= grid.size() || std::abs(grid[k] - t) > 1e-9) return;
                       const LatticeField& eta = snaps[k++];
                       if (t < 1.0) return;  // both start at zero
                       double d2 = 0;
                       for (std::size_t i = 0; i < eta.size(); ++i)
                           d2 += sq(eta.r[i] - etah.r[i]) + sq(eta.p[i] - etah.p[i]);
                       const double den = eta.l2_norm() + etah.l2_norm();
                       if (den > 0) worst = std::max(worst, std::sqrt(d2) / den);
                   },
                   40);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    const bool pass = worst <= 0.30 && secs <= 300.0;
    report(6, pass,
           fmt("max rel difference eta1 vs eta1^h %.3f (tol 0.30) over t<=%g; %.0fs (tol 300s)",
               worst, t_end, secs));
}

// ---------------------------------------------------------------- criterion 7
void criterion_expansion_order() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015, t_end = 200.0;
    auto fam = make_family(c_star);
    auto prof = solve_profile(c_star);
    Window win = simulation_window(c_star, t_end, 50);
    win.j_min -= 90;
    win.width += 180;
    EnsembleConfig ec;
    ec.master_seed = 577215;

    double gap1[2], gap2[2];
    const double sigmas[2] = {0.07, 0.035};
    for (int si = 0; si < 2; ++si) {
        ec.sigma = sigmas[si];
        auto coeffs = sample_kappa(ec, 0, win);  // same kappa, scaled strength
        SimulateOptions sopt;
        sopt.t_end = t_end;
        auto fit = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
        auto run = second_order_path(fam, coeffs, c_star, TailVariant::full, 0.05, t_end, 10);
        double m1 = 0, m2 = 0;
        for (std::size_t i = 0; i < fit.t.size(); ++i) {
            // matching grid: run recorded every 10 steps = fit stride
            std::size_t k = std::min(i, run.second.t.size() - 1);
            if (std::abs(run.second.t[k] - fit.t[i]) > 1e-9) continue;
            const double first = c_star + sigmas[si] * run.first.c1[k];
            m1 = std::max(m1, std::abs(fit.c[i] - first));
            m2 = std::max(m2, std::abs(fit.c[i] - first - sq(sigmas[si]) * run.second.c2[k]));
        }
        gap1[si] = m1;
        gap2[si] = m2;
    }
    const double r1 = gap1[0] / gap1[1];
    const double r2 = gap2[0] / gap2[1];
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    const bool pass = r1 >= 2.5 && r1 <= 5.5 && r2 >= 5.0 && r2 <= 11.0;
    report(7, pass,
           fmt("first-order gap ratio %.2f (4 +- 1.5); second-order %.2f (8 +- 3); gaps at "
               "sigma=0.07: %.2e / %.2e; %.0fs",
               r1, r2, gap1[0], gap2[0], secs));
}

// ---------------------------------------------------------------- criterion 8
void criterion_expectation_identity() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015, dt = 0.05;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto t0 = fam.tables_at(c_star);
    auto t_lo = fam.tables_at(c_star - 1e-4);
    auto t_hi = fam.tables_at(c_star + 1e-4);
    EnsembleConfig ec;
    ec.master_seed = 141421;
    const auto variant = TailVariant::full;

    bool pass = true;
    std::string detail;
    for (double tt : {20.0, 60.0}) {
        const Vec2 det = expected_drift(fam, tt, c_star, variant, dt);
        const double rad = t0->support_radius();
        const Window win{-static_cast<long>(std::ceil(tt + rad)) - 12,
                         static_cast<std::size_t>(std::ceil(tt + rad) + std::ceil(c_star * tt + rad) + 25)};
        const double xi = c_star * tt;
        const int NR = 2000;
        std::vector<double> vy(NR);
        parallel_for(NR, [&](std::size_t q) {
            auto coeffs = sample_kappa(ec, q, win);
            auto eta = integrate_tail(*t0, coeffs, c_star, variant, dt, tt, win);
            FirstOrderEval ev(t0, coeffs, c_star);
            Vec2 mm{};
            const long lo = std::max(win.j_min, static_cast<long>(std::floor(xi - rad)));
            const long hi = std::min(win.j_min + static_cast<long>(win.width) - 1,
                                     static_cast<long>(std::ceil(xi + rad)));
            for (long j = lo; j <= hi; ++j) {
                const double x = static_cast<double>(j) - xi;
                const double k = coeffs.at(j);
                mm.x += t0->eval(Fn::dxx_r2, x) * k;
                mm.y += -t0->eval(Fn::dxc_r2, x) * k;
            }
            const Vec2 dxi_map = t0->A_inv * Vec2{-0.5 * mm.x, -0.5 * mm.y};
            const RealSeq kap = RealSeq::kappa_of(coeffs);
            const Vec2 mhi = first_order_maps(*t_hi, xi, kap);
            const Vec2 mlo = first_order_maps(*t_lo, xi, kap);
            const Vec2 dc_map{(mhi.x - mlo.x) / 2e-4, (mhi.y - mlo.y) / 2e-4};
            WaveFrame frame = WaveFrame::build(*t0, xi, win);
            const Vec2 g11 = mixed_maps(frame, *t0, kap, eta);
            const Vec2 g02 = quadratic_maps_field(*t0, xi, eta.r, eta.r, eta.j_min);
            vy[q] = ev.xi1(tt) * dxi_map.y + ev.c1(tt) * dc_map.y + g11.y + g02.y;
        }, 2);
        RunningStats my;
        for (double v : vy) my.add(v);
        const double dev = std::abs(my.mean - det.y) / my.stderror();
        pass = pass && dev <= 3.0;
        detail += fmt("t=%g: det %.3e, mc %.3e +- %.1e (dev %.2f SE); ", tt, det.y, my.mean,
                      my.stderror(), dev);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    pass = pass && secs <= 600.0;
    report(8, pass, detail + fmt("%.0fs (tol 600s)", secs));
}

// ---------------------------------------------------------------- criterion 9
void criterion_limit_convergence() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto tab = fam.tables_at(c_star);
    LimitOptions opt;
    opt.tol = 1e-8;

    bool pass = true;
    std::string detail;
    double worst_ratio = 0;
    for (auto variant : {TailVariant::full, TailVariant::homogeneous}) {
        auto lims = response_limit_grid(*tab, c_star, variant, {0.0, 0.5}, opt);
        for (const auto& L : lims) {
            const double ratio = std::exp(-L.rate_q * opt.dn);  // per snapshot step
            worst_ratio = std::max(worst_ratio, ratio);
            pass = pass && ratio < 0.9 && L.distances.back() <= opt.tol;
        }
    }
    // independent kernel-quadrature route for the homogeneous variant
    auto snap = response_limit_grid(*tab, c_star, TailVariant::homogeneous, {0.25}, opt)[0];
    auto quad = homogeneous_limit_quadrature(*tab, c_star, 0.25, snap.Jmax, 0.02);
    double d2 = 0;
    for (long m = -snap.Jmax; m <= snap.Jmax; ++m)
        for (long j = -snap.Jmax; j <= snap.Jmax; ++j) {
            const double w = std::exp(2 * snap.a * static_cast<double>(j));
            d2 += w * (sq(snap.R_r(j, m) - quad.R_r(j, m)) + sq(snap.R_p(j, m) - quad.R_p(j, m)));
        }
    const double qd = std::sqrt(d2);
    pass = pass && qd <= 10.0 * opt.tol;

    // phase-wrap identity within 1e-6 (offset 5e-5 below the wrap)
    auto wrap = response_limit_grid(*tab, c_star, TailVariant::full, {0.0, 1.0 - 5e-5}, opt);
    double wsup = 0;
    for (long m = -wrap[0].Jmax + 1; m <= wrap[0].Jmax; ++m)
        for (long j = -wrap[0].Jmax + 1; j <= wrap[0].Jmax; ++j)
            wsup = std::max({wsup, std::abs(wrap[1].R_r(j, m) - wrap[0].R_r(j - 1, m - 1)),
                             std::abs(wrap[1].R_p(j, m) - wrap[0].R_p(j - 1, m - 1))});
    pass = pass && wsup <= 1e-6;

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    report(9, pass,
           fmt("fitted snapshot ratio %.2f (tol <0.9); quadrature-vs-snapshot %.2e (tol 1e-7); "
               "phase wrap %.2e (tol 1e-6); %.0fs",
               worst_ratio, qd, wsup, secs));
}

// ------------------------------------------------------- criteria 10 and 11
RateTable g_rate_full;  // shared between criteria 10 and 11

void criterion_power_law() {
    const auto tic = std::chrono::steady_clock::now();
    const int nc = 8;
    const double c_min = 1.004, c_max = 1.03;
    std::vector<double> cs;
    for (int i = 0; i < nc; ++i) {
        const double f = static_cast<double>(i) / (nc - 1);
        cs.push_back(1.0 + (c_min - 1.0) * std::pow((c_max - 1.0) / (c_min - 1.0), f));
    }
    std::vector<AttenuationRate> rates(cs.size());
    parallel_for(cs.size(), [&](std::size_t i) {
        auto fam = make_family(cs[i], 0.002, 0.002, 7);
        rates[i] = attenuation_rate(fam, cs[i], TailVariant::full, 8);
    }, 2);

    bool pass = true;
    double worst_pvar = 0;
    std::vector<double> lx, ly;
    g_rate_full.c.clear();
    g_rate_full.Q_c.clear();
    for (const auto& r : rates) {
        pass = pass && r.Q_c < 0;
        double imin = 1e300, imax = -1e300;
        for (double v : r.integrand_c) {
            imin = std::min(imin, v);
            imax = std::max(imax, v);
        }
        const double pvar = (imax - imin) / std::abs(r.Q_c * r.c);
        worst_pvar = std::max(worst_pvar, pvar);
        lx.push_back(std::log(r.c - 1.0));
        ly.push_back(std::log(std::abs(r.Q_c)));
        g_rate_full.c.push_back(r.c);
        g_rate_full.Q_c.push_back(r.Q_c);
    }
    const LineFit fit = fit_line(lx, ly);
    pass = pass && fit.slope >= 1.6 && fit.slope <= 2.4 && worst_pvar <= 0.10;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    report(10, pass,
           fmt("log-log slope %.2f (range [1.6,2.4]); Q_c < 0 on all 8 speeds: %s; worst "
               "p-variation %.2e (tol 0.10); %.0fs",
               fit.slope, pass || fit.slope < 1.6 || fit.slope > 2.4 ? "yes" : "no", worst_pvar,
               secs));
}

void criterion_ensemble_decay() {
    const auto tic = std::chrono::steady_clock::now();
    const double c_star = 1.015, sigma = 0.1, t_end = 100.0;  // tau = sigma^2 t in [0, 1]
    if (g_rate_full.c.empty()) {
        // criterion 10 was skipped; build the table now
        const int nc = 8;
        std::vector<double> cs;
        for (int i = 0; i < nc; ++i) {
            const double f = static_cast<double>(i) / (nc - 1);
            cs.push_back(1.0 + 0.004 * std::pow(0.03 / 0.004, f));
        }
        std::vector<AttenuationRate> rates(cs.size());
        parallel_for(cs.size(), [&](std::size_t i) {
            auto fam = make_family(cs[i], 0.002, 0.002, 7);
            rates[i] = attenuation_rate(fam, cs[i], TailVariant::full, 8);
        }, 2);
        for (const auto& r : rates) {
            g_rate_full.c.push_back(r.c);
            g_rate_full.Q_c.push_back(r.Q_c);
        }
    }
    auto path = integrate_limit_ode(g_rate_full, c_star, sq(sigma) * t_end, 1e-3);

    auto fam = make_family(c_star);
    auto tab = fam.tables_at(c_star);
    auto prof = solve_profile(c_star);
    EnsembleConfig ec;
    ec.master_seed = 662607;
    ec.sigma = sigma;
    ec.c_star = c_star;
    ec.realizations = 100;
    Window win = simulation_window(c_star, t_end, 50);
    win.j_min -= 90;
    win.width += 180;

    std::vector<double> grid;
    for (double t = 0; t <= t_end + 1e-9; t += 0.5) grid.push_back(t);
    SimulateOptions sopt;
    sopt.t_end = t_end;
    auto stats = run_ensemble(
        ec, grid, {"c_fit", "c_fit_cv"},
        [&](std::uint64_t q) {
            auto coeffs = sample_kappa(ec, q, win);
            auto traj = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
            // control variate: subtract the exactly mean-zero sigma*c1 term
            FirstOrderEval ev(tab, coeffs, c_star);
            std::vector<double> cv(traj.c.size());
            for (std::size_t i = 0; i < traj.c.size(); ++i)
                cv[i] = traj.c[i] - sigma * ev.c1(traj.t[i]);
            return std::vector<std::vector<double>>{traj.c, cv};
        },
        2);

    // max gap between the ensemble mean and the limiting ODE on the tau grid
    double gap = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double tau = sq(sigma) * grid[i];
        // locate tau in the ODE path (uniform step 1e-3)
        const double x = tau / 1e-3;
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(x),
                                                    path.c_lim.size() - 2);
        const double w = x - static_cast<double>(k);
        const double clim = (1 - w) * path.c_lim[k] + w * path.c_lim[k + 1];
        gap = std::max(gap, std::abs(stats.stat[0][i].mean - clim));
    }

    // early-time slope of E[c_fit] via the variance-reduced track
    std::vector<double> ts, ms, ms_raw;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ts.push_back(grid[i]);
        ms.push_back(stats.stat[1][i].mean);
        ms_raw.push_back(stats.stat[0][i].mean);
    }
    const LineFit sfit = fit_line(ts, ms);
    const LineFit sfit_raw = fit_line(ts, ms_raw);
    // Q_c at c_star from the table spline via a tiny ODE step
    auto q_at = integrate_limit_ode(g_rate_full, c_star, 1e-6, 1e-6);
    const double qc = (q_at.c_lim.back() - c_star) / 1e-6;
    const double slope_rel = std::abs(sfit.slope - sq(sigma) * qc) / std::abs(sq(sigma) * qc);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    const bool pass = gap <= 1e-3 && slope_rel <= 0.20;
    report(11, pass,
           fmt("max|E[c_fit]-c_lim| %.2e (tol 1e-3); slope %.3e vs sigma^2 Q_c %.3e "
               "(rel dev %.0f%%, tol 20%%; raw-track slope %.3e); failed runs %zu; %.0fs",
               gap, sfit.slope, sq(sigma) * qc, 100 * slope_rel, sfit_raw.slope, stats.failed,
               secs));
}

// --------------------------------------------------------------- criterion 12
void criterion_reproducibility() {
    // rerun the statistical kernel of criterion 5 twice and compare bit patterns
    std::string bits1, bits2;
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.003, 0.003, 9);
    auto tab = fam.tables_at(c_star);
    const Window win{-120, 361};
    EnsembleConfig ec;
    ec.master_seed = 271828;
    ec.realizations = 200;
    std::vector<double> grid = {10.0, 50.0};
    auto traj = [&](std::uint64_t q) {
        auto coeffs = sample_kappa(ec, q, win);
        FirstOrderEval ev(tab, coeffs, c_star);
        std::vector<double> row;
        for (double t : grid) row.push_back(ev.c1(t));
        return std::vector<std::vector<double>>{row};
    };
    auto s1 = run_ensemble(ec, grid, {"c1"}, traj, 1);
    auto s2 = run_ensemble(ec, grid, {"c1"}, traj, 4);
    bool pass = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        pass = pass && s1.stat[0][i].mean == s2.stat[0][i].mean &&
               s1.stat[0][i].m2 == s2.stat[0][i].m2;
    }
    // and a direct-simulation rerun is bit-identical
    EnsembleConfig e2;
    e2.master_seed = 8;
    e2.sigma = 0.07;
    const Window w2{-80, 241};
    auto coeffs = sample_kappa(e2, 0, w2);
    auto prof = solve_profile(c_star);
    LatticeField u0 = prof.sample_lattice(0.0, w2);
    IntegrateOptions opt;
    opt.dt = 0.05;
    opt.t_end = 30.0;
    auto a = integrate(u0, coeffs, opt);
    auto b = integrate(u0, coeffs, opt);
    pass = pass && a.r == b.r && a.p == b.p;
    report(12, pass, pass ? "ensemble stats thread-invariant and reruns bit-identical"
                          : "rerun mismatch detected");
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            selected.push_back(std::atoi(argv[++i]));
    }
    auto want = [&](int id) {
        return selected.empty() || std::find(selected.begin(), selected.end(), id) != selected.end();
    };

    if (want(1)) criterion_profiles();
    if (want(2)) criterion_energy();
    if (want(3)) criterion_propagator();
    if (want(4)) criterion_equivalence();
    if (want(5)) criterion_first_order_stats(false, nullptr);
    if (want(6)) criterion_variant_proximity();
    if (want(7)) criterion_expansion_order();
    if (want(8)) criterion_expectation_identity();
    if (want(9)) criterion_limit_convergence();
    if (want(10)) criterion_power_law();
    if (want(11)) criterion_ensemble_decay();
    if (want(12)) criterion_reproducibility();

    std::printf("\n%zu criteria reported, %d failed\n", g_lines.size(), g_failures);
    return g_failures == 0 ? 0 : 1;
}
