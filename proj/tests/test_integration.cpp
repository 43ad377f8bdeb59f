// Cross-module checks that exercise full pipelines; slower than the unit
// suites, still minutes-scale. Each case follows one of the documented
// behaviors of the coupled system.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fput/pipelines.hpp"

using namespace fput;

TEST_CASE("exact wave is preserved by the direct integrator (fit at t = 40)") {
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.003, 0.003, 9);
    auto prof = solve_profile(c_star);
    Window win = simulation_window(c_star, 40.0, 50);
    win.j_min -= 90;
    win.width += 180;
    auto coeffs = SpringCoefficients::zero(win.j_min, win.width);

    SimulateOptions sopt;
    sopt.t_end = 40.0;
    auto traj = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
    CHECK(std::abs(traj.c.back() - c_star) <= 1e-6);
    CHECK(std::abs(traj.xi.back() - c_star * 40.0) <= 1e-5);
}

TEST_CASE("modulation coordinates reconstruct the direct field") {
    const double c_star = 1.015, sigma = 0.07, t_end = 100.0;
    auto fam = make_family(c_star);
    auto prof = solve_profile(c_star);
    Window win = simulation_window(c_star, t_end, 50);
    win.j_min -= 90;
    win.width += 180;
    EnsembleConfig ec;
    ec.master_seed = 2718;
    ec.sigma = sigma;
    auto coeffs = sample_kappa(ec, 0, win);

    // direct field at t_end
    LatticeField u0 = prof.sample_lattice(0.0, win);
    IntegrateOptions iopt;
    iopt.dt = 0.05;
    iopt.t_end = t_end;
    auto u_direct = integrate(u0, coeffs, iopt);

    // modulation route, then phi_{c(t)}(. - xi(t)) + eta(t)
    ModulationState init;
    init.c = c_star;
    init.eta = LatticeField(win.j_min, win.width);
    double worst_ortho = 0, min_margin = 1e300;
    auto fin = integrate_modulation(init, coeffs, fam, 0.05, t_end,
                                    [&](const ModObserverPoint& p) {
                                        worst_ortho = std::max({worst_ortho,
                                                                std::abs(p.ortho_dxi),
                                                                std::abs(p.ortho_dc)});
                                        min_margin = std::min(min_margin, p.ab_margin);
                                    },
                                    20);
    // invertibility margin of A - B[eta] stays comfortable at this strength
    CHECK(min_margin >= 0.5);
    auto tab = fam.tables_at(fin.c);
    LatticeField recon = fin.eta;
    std::vector<double> pr(win.width), pp(win.width);
    tab->sample(Fn::r, fin.xi, win.j_min, win.width, pr.data());
    tab->sample(Fn::p, fin.xi, win.j_min, win.width, pp.data());
    for (std::size_t i = 0; i < win.width; ++i) {
        recon.r[i] += pr[i];
        recon.p[i] += pp[i];
    }
    double sup = 0;
    for (std::size_t i = 0; i < win.width; ++i)
        sup = std::max({sup, std::abs(recon.r[i] - u_direct.r[i]),
                        std::abs(recon.p[i] - u_direct.p[i])});
    CHECK(sup <= 1e-5);
    CHECK(worst_ortho <= 1e-6);
}

TEST_CASE("orthogonality production rate of the full T map") {
    // d/dt of both Omega constraints vanishes along the modulation flow; the
    // numerical production averages below 1e-8 per unit time, with the
    // transient excursion staying under the trajectory drift budget
    const double c_star = 1.015, sigma = 0.07, t_end = 100.0;
    auto fam = make_family(c_star);
    Window win = simulation_window(c_star, t_end, 50);
    win.j_min -= 90;
    win.width += 180;
    EnsembleConfig ec;
    ec.master_seed = 3141;
    ec.sigma = sigma;
    auto coeffs = sample_kappa(ec, 0, win);

    ModulationState init;
    init.c = c_star;
    init.eta = LatticeField(win.j_min, win.width);
    double worst = 0, last_t = 0, last1 = 0, last2 = 0;
    integrate_modulation(init, coeffs, fam, 0.05, t_end,
                         [&](const ModObserverPoint& p) {
                             worst = std::max({worst, std::abs(p.ortho_dxi),
                                               std::abs(p.ortho_dc)});
                             last_t = p.t;
                             last1 = p.ortho_dxi;
                             last2 = p.ortho_dc;
                         },
                         20);
    CHECK(worst <= 1e-6);
    CHECK(std::abs(last1) / last_t <= 1e-8);
    CHECK(std::abs(last2) / last_t <= 1e-8);
}

TEST_CASE("second-order amplitude tracks the fitted decay over long times") {
    // sigma = 0.07: |c_fit - (c* + sigma c1 + sigma^2 c2)| small; the
    // homogeneous-tail corrections stay close to the full ones
    const double c_star = 1.015, sigma = 0.07, t_end = 600.0;
    auto fam = make_family(c_star);
    auto prof = solve_profile(c_star);
    Window win = simulation_window(c_star, t_end, 50);
    win.j_min -= 90;
    win.width += 180;
    EnsembleConfig ec;
    ec.master_seed = 1618;
    ec.sigma = sigma;
    auto coeffs = sample_kappa(ec, 0, win);

    SimulateOptions sopt;
    sopt.t_end = t_end;
    auto fit = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
    auto full = second_order_path(fam, coeffs, c_star, TailVariant::full, 0.05, t_end, 10);
    auto homog = second_order_path(fam, coeffs, c_star, TailVariant::homogeneous, 0.05, t_end, 10);

    double gap = 0, vmax = 0, vdiff = 0;
    for (std::size_t i = 0; i < fit.t.size() && i < full.second.t.size(); ++i) {
        REQUIRE(std::abs(fit.t[i] - full.second.t[i]) <= 1e-9);
        const double model =
            c_star + sigma * full.first.c1[i] + sq(sigma) * full.second.c2[i];
        gap = std::max(gap, std::abs(fit.c[i] - model));
        vmax = std::max(vmax, std::abs(full.second.c2[i]));
        vdiff = std::max(vdiff, std::abs(full.second.c2[i] - homog.second.c2[i]));
    }
    CHECK(gap <= 3e-4);
    CHECK(vdiff <= 0.3 * vmax);
}

TEST_CASE("weighted norm of orthogonal linear data decays in the co-moving frame") {
    const double c_star = 1.015, t_end = 400.0;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto tab = fam.tables_at(c_star);
    Window win = simulation_window(c_star, t_end, 80);
    const double a = ProfileFamily::weight_a(c_star);

    // orthogonalize a bump against the wave modes at t = 0
    LatticeField w0(win.j_min, win.width);
    for (long j = -8; j <= 8; ++j) {
        w0.r[w0.idx(j)] = std::exp(-0.3 * j * j);
        w0.p[w0.idx(j)] = 0.4 * std::exp(-0.3 * j * j);
    }
    WaveFrame frame = WaveFrame::build(*tab, 0.0, win);
    const auto ts0 = frame.tail_sums(w0);
    const Vec2 m{frame.pair_dxi(w0, ts0), frame.pair_dc(w0, ts0)};
    const Vec2 g = frame.A_inv() * m;
    frame.add_dxi(w0, -g.x);
    frame.add_dc(w0, -g.y);

    std::vector<double> ts, ln;
    LatticeField w = w0;
    const double chunk = 50.0;
    for (double t0 = 0; t0 < t_end - 1e-9; t0 += chunk) {
        w = evolve_linearized(*tab, c_star, TailVariant::full, w, t0, t0 + chunk, 0.05);
        ts.push_back(t0 + chunk);
        ln.push_back(std::log(weighted_l2(w, c_star * (t0 + chunk), a)));
    }
    const LineFit fitl = fit_line(ts, ln);
    CHECK(fitl.slope < 0.0);  // b_est > 0
    // meaningful total decay over the window, not noise
    CHECK(ln.front() - ln.back() > 0.3);
}

TEST_CASE("limiting tail: standard deviation profile and variance additivity") {
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto tab = fam.tables_at(c_star);
    LimitOptions opt;
    opt.tol = 1e-8;
    std::vector<double> p_grid = {0.0, 0.25, 0.5, 0.75};
    auto lims = response_limit_grid(*tab, c_star, TailVariant::homogeneous, p_grid, opt);

    EnsembleConfig zc;
    zc.master_seed = 9090;
    auto zeta = [&](long q) { return kappa_value(zc, 0, q); };
    const long Jm = lims[0].Jmax;
    auto curves = limiting_tail(lims, zeta, -Jm + 2, Jm - 2);

    // std positive behind, decayed ahead: compare x = -30 region vs +10 widths
    const double width = 2.0 / ProfileFamily::epsilon_of(c_star);
    double std_behind = 0, std_ahead = 0, std_max = 0;
    for (std::size_t i = 0; i < curves.x.size(); ++i) {
        const double s = std::hypot(curves.std_r[i], curves.std_p[i]);
        std_max = std::max(std_max, s);
        if (curves.x[i] < -20 && curves.x[i] > -50) std_behind = std::max(std_behind, s);
        if (std::abs(curves.x[i] - 10.0 * width) < 2.0) std_ahead = std::max(std_ahead, s);
    }
    CHECK(std_behind > 0.0);
    CHECK(std_ahead <= 0.05 * std_max);

    // left-limit continuity at integers via the converged phases:
    // sample(x -> j^+) corresponds to the p -> 1 wrap already asserted in the
    // acceptance suite; here check the sampled curve has no integer jumps
    // larger than the neighboring variation scale
    // variance additivity: Monte Carlo over 2000 zeta draws at two positions
    for (double xq : {-10.25, -30.5}) {
        // locate grid point
        std::size_t at = 0;
        for (std::size_t i = 0; i < curves.x.size(); ++i)
            if (std::abs(curves.x[i] - xq) < 1e-9) at = i;
        REQUIRE(std::abs(curves.x[at] - xq) < 1e-9);
        const long j = static_cast<long>(std::ceil(xq));
        const double p = std::ceil(xq) - xq;
        const LimitResponse* R = nullptr;
        for (const auto& L : lims)
            if (std::abs(L.p - p) < 1e-9) R = &L;
        REQUIRE(R != nullptr);
        RunningStats mc;
        for (int s = 0; s < 2000; ++s) {
            EnsembleConfig zs;
            zs.master_seed = 5000 + s;
            double acc = 0;
            for (long mm = -Jm; mm <= Jm; ++mm)
                acc += kappa_value(zs, 0, mm - j) * R->R_r(j, mm);
            mc.add(acc);
        }
        const double sig2 = sq(curves.std_r[at]);
        const double se = sig2 * std::sqrt(2.0 / 1999.0);
        CHECK(std::abs(mc.variance() - sig2) <= 3.0 * se);
    }
}

TEST_CASE("M02 bound is stable under window doubling; drift approaches a periodic limit") {
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto tab = fam.tables_at(c_star);
    LimitOptions opt;
    opt.tol = 1e-8;
    auto base = response_limit_grid(*tab, c_star, TailVariant::homogeneous, {0.5}, opt)[0];
    opt.Jmax = 2 * base.Jmax;
    auto wide = response_limit_grid(*tab, c_star, TailVariant::homogeneous, {0.5}, opt)[0];

    const auto mbase = M_maps(fam, base, base);
    const auto mwide = M_maps(fam, wide, wide);
    const double cb = std::hypot(mbase.M02.x, mbase.M02.y) / sq(base.weighted_norm());
    const double cw = std::hypot(mwide.M02.x, mwide.M02.y) / sq(wide.weighted_norm());
    CHECK(std::abs(cw - cb) <= 0.1 * std::abs(cb));

    // expected drift at successive periods converges geometrically-ish
    const double t1 = 40.0 / c_star, t2 = 60.0 / c_star, t3 = 80.0 / c_star;
    const Vec2 d1 = expected_drift(fam, t1, c_star, TailVariant::homogeneous);
    const Vec2 d2 = expected_drift(fam, t2, c_star, TailVariant::homogeneous);
    const Vec2 d3 = expected_drift(fam, t3, c_star, TailVariant::homogeneous);
    const double e12 = std::hypot(d2.x - d1.x, d2.y - d1.y);
    const double e23 = std::hypot(d3.x - d2.x, d3.y - d2.y);
    CHECK(e23 < e12);
}

TEST_CASE("attenuation-rate variants stay close at the reference speed") {
    const double c_star = 1.015;
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    const auto full = attenuation_rate(fam, c_star, TailVariant::full, 8);
    const auto homog = attenuation_rate(fam, c_star, TailVariant::homogeneous, 8);
    CHECK(full.Q_c < 0.0);
    CHECK(homog.Q_c < 0.0);
    CHECK(std::abs(homog.Q_c - full.Q_c) <= 0.35 * std::abs(full.Q_c));
}

TEST_CASE("mean amplitude curves collapse under the sigma^2 time scaling") {
    const double c_star = 1.015, tau_max = 0.2;
    auto fam = make_family(c_star);
    auto prof = solve_profile(c_star);
    const double sigmas[2] = {0.07, 0.1};
    const int NR = 150;

    std::vector<std::vector<double>> means(2), ses(2);
    std::vector<double> taus;
    for (double tau = 0; tau <= tau_max + 1e-12; tau += 0.02) taus.push_back(tau);

    for (int si = 0; si < 2; ++si) {
        const double sigma = sigmas[si];
        const double t_end = tau_max / sq(sigma);
        EnsembleConfig ec;
        ec.master_seed = 424242;  // same kappa stream for both strengths
        ec.sigma = sigma;
        ec.realizations = NR;
        Window win = simulation_window(c_star, t_end, 50);
        win.j_min -= 90;
        win.width += 180;
        std::vector<double> grid;
        for (double tau : taus) grid.push_back(tau / sq(sigma));
        SimulateOptions sopt;
        sopt.t_end = t_end;
        sopt.fit_times = grid;
        auto stats = run_ensemble(ec, grid, {"c"},
                                  [&](std::uint64_t q) {
                                      auto coeffs = sample_kappa(ec, q, win);
                                      auto traj = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
                                      // trajectory grid = fit grid = requested grid
                                      std::vector<double> row(grid.size());
                                      for (std::size_t i = 0; i < grid.size(); ++i) row[i] = traj.c[i];
                                      return std::vector<std::vector<double>>{row};
                                  },
                                  2);
        for (std::size_t i = 0; i < taus.size(); ++i) {
            means[si].push_back(stats.stat[0][i].mean);
            ses[si].push_back(stats.stat[0][i].stderror());
        }
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double band = 3.0 * std::hypot(ses[0][i], ses[1][i]);
        CHECK(std::abs(means[0][i] - means[1][i]) <= band + 1e-12);
    }
}
