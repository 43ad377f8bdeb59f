#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fput/ensemble.hpp"
#include "fput/expansion.hpp"
#include "fput/modulation.hpp"

using namespace fput;

namespace {

ProfileFamily& family_1015() {
    static ProfileFamily fam([] {
        ProfileFamily::Config cfg;
        cfg.c_lo = 1.010;
        cfg.c_hi = 1.020;
        cfg.nodes = 11;
        return cfg;
    }());
    return fam;
}

RealSeq random_seq(long j0, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    RealSeq f{j0, std::vector<double>(n)};
    for (auto& v : f.v) v = dist(rng);
    return f;
}

}  // namespace

TEST_CASE("first-order maps: linearity and even-input structure") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);

    RealSeq zero{-50, std::vector<double>(101, 0.0)};
    const Vec2 z = first_order_maps(*t, 0.0, zero);
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);

    // f even about 0, xi = 0: <dxi r^2, f> = 0, so only the Gamma-component
    // survives through the structure of A^{-1}
    RealSeq f{-50, std::vector<double>(101, 0.0)};
    for (long j = -50; j <= 50; ++j)
        f.v[static_cast<std::size_t>(j + 50)] = std::exp(-0.05 * j * j);
    const Vec2 g = first_order_maps(*t, 0.0, f);
    CHECK(std::abs(g.y) <= 1e-14);
    // oracle by direct summation
    double v = 0;
    for (long j = -50; j <= 50; ++j)
        v += t->eval(Fn::dc_r2, static_cast<double>(j)) * f.at(j);
    CHECK(g.x == doctest::Approx(v / (2.0 * t->alpha0)).epsilon(1e-12));
}

TEST_CASE("unit-spike forcing matches the explicit per-site formula") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);
    const Window win{-120, 261};
    const double xi = 11.4;
    WaveFrame frame = WaveFrame::build(*t, xi, win);
    const long m = 7;

    auto T = forcing_T10(frame, *t, RealSeq::delta(m));

    // direct assembly: 1/2 (dxi phi, dc phi)^T A^{-1} (dxi r^2, dc r^2)(m - xi)
    //                  + r(m - xi) (0, delta_m - delta_{m+1})
    const double xm = static_cast<double>(m) - xi;
    const Vec2 s = t->A_inv * Vec2{-t->eval(Fn::dx_r2, xm), t->eval(Fn::dc_r2, xm)};
    LatticeField direct(win.j_min, win.width);
    for (long j = win.j_min; j <= direct.j_max(); ++j) {
        const double x = static_cast<double>(j) - xi;
        if (std::abs(x) > t->support_radius()) continue;
        const std::size_t i = direct.idx(j);
        direct.r[i] = 0.5 * (-t->eval(Fn::dx_r, x) * s.x + t->eval(Fn::dc_r, x) * s.y);
        direct.p[i] = 0.5 * (-t->eval(Fn::dx_p, x) * s.x + t->eval(Fn::dc_p, x) * s.y);
    }
    const double rm = t->eval(Fn::r, xm);
    direct.p[direct.idx(m)] += rm;
    direct.p[direct.idx(m + 1)] -= rm;

    double err = 0;
    for (std::size_t i = 0; i < win.width; ++i)
        err = std::max({err, std::abs(T.r[i] - direct.r[i]), std::abs(T.p[i] - direct.p[i])});
    CHECK(err <= 1e-12);
}

TEST_CASE("bilinear maps: scaling, symmetry, zero field") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.013);
    const double xi = -4.2;
    auto f = random_seq(-60, 121, 5);
    auto g = random_seq(-60, 121, 6);

    const Vec2 q1 = quadratic_maps(*t, xi, f, g);
    const Vec2 q2 = quadratic_maps(*t, xi, g, f);
    CHECK(q1.x == doctest::Approx(q2.x).epsilon(1e-14));
    CHECK(q1.y == doctest::Approx(q2.y).epsilon(1e-14));

    RealSeq f3 = f;
    for (auto& v : f3.v) v *= 3.0;
    const Vec2 q3 = quadratic_maps(*t, xi, f3, g);
    CHECK(q3.x == doctest::Approx(3.0 * q1.x).epsilon(1e-13));
    CHECK(q3.y == doctest::Approx(3.0 * q1.y).epsilon(1e-13));

    const Window win{-80, 161};
    WaveFrame frame = WaveFrame::build(*t, xi, win);
    LatticeField h(win.j_min, win.width);
    const Vec2 m0 = mixed_maps(frame, *t, f, h);
    CHECK(m0.x == 0.0);
    CHECK(m0.y == 0.0);

    // scaling of the (1,1) map in f
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-0.02, 0.02);
    for (std::size_t i = 10; i + 10 < win.width; ++i) {
        h.r[i] = dist(rng);
        h.p[i] = dist(rng);
    }
    const Vec2 m1 = mixed_maps(frame, *t, f, h);
    const Vec2 m3 = mixed_maps(frame, *t, f3, h);
    CHECK(m3.x == doctest::Approx(3.0 * m1.x).epsilon(1e-12));
    CHECK(m3.y == doctest::Approx(3.0 * m1.y).epsilon(1e-12));
}

TEST_CASE("T10 forcing is symplectically orthogonal to the wave modes") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);
    const Window win{-150, 321};
    const double xi = 3.1;
    WaveFrame frame = WaveFrame::build(*t, xi, win);
    auto f = random_seq(-80, 161, 17);
    auto T = forcing_T10(frame, *t, f);
    const auto ts = frame.tail_sums(T);
    CHECK(std::abs(frame.pair_dxi(T, ts)) <= 1e-8);
    CHECK(std::abs(frame.pair_dc(T, ts)) <= 1e-8);
}

TEST_CASE("T10 spike response decays exponentially in |m - xi|") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);
    const Window win{-150, 321};
    const double xi = 0.0;
    WaveFrame frame = WaveFrame::build(*t, xi, win);
    std::vector<double> xs, ys;
    for (long m = 4; m <= 44; m += 5) {
        auto T = forcing_T10(frame, *t, RealSeq::delta(m));
        const double n = T.l2_norm();
        if (n < 1e-14) break;
        xs.push_back(static_cast<double>(m));
        ys.push_back(std::log(n));
    }
    REQUIRE(xs.size() >= 5);
    const LineFit fit = fit_line(xs, ys);
    CHECK(fit.slope < -0.1);  // beta > 0
}

TEST_CASE("first-order closed forms: zero start, spike kappa, invariance ahead") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);
    const double c_star = 1.015;
    const Window win{-150, 401};

    // single-site kappa
    const long m0 = 3;
    std::vector<double> kap(win.width, 0.0);
    kap[static_cast<std::size_t>(m0 - win.j_min)] = 0.8;
    SpringCoefficients coeffs(win.j_min, kap, 0.0, 1.0);
    FirstOrderEval ev(t, coeffs, c_star);

    CHECK(ev.c1(0.0) == 0.0);
    CHECK(ev.gamma1_I(0.0) == 0.0);
    CHECK(ev.gamma1_II(0.0) == 0.0);

    for (double tt : {5.0, 20.0, 60.0}) {
        const double xi = c_star * tt;
        const double expect = -0.8 / (2.0 * c_star * t->alpha0) *
                              (t->eval(Fn::r2, static_cast<double>(m0) - xi) -
                               t->eval(Fn::r2, static_cast<double>(m0)));
        CHECK(ev.c1(tt) == doctest::Approx(expect).epsilon(1e-12));
    }

    // perturbing kappa far ahead of the wave leaves c1 unchanged exactly
    auto kap2 = kap;
    kap2[static_cast<std::size_t>(230 - win.j_min)] = 0.9;  // site 230 > c t + rad
    SpringCoefficients coeffs2(win.j_min, kap2, 0.0, 1.0);
    FirstOrderEval ev2(t, coeffs2, c_star);
    for (double tt : {5.0, 20.0, 60.0}) CHECK(ev2.c1(tt) == ev.c1(tt));
}

TEST_CASE("first-order ODE route reproduces the closed form") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);
    const double c_star = 1.015;
    const Window win{-150, 401};
    EnsembleConfig ec;
    ec.master_seed = 5;
    auto coeffs = sample_kappa(ec, 0, win);
    FirstOrderEval ev(t, coeffs, c_star);
    const RealSeq kap = RealSeq::kappa_of(coeffs);

    // RK4 with dt = 0.01 on (gamma1_dot, c1_dot) = (Gamma10, C10)(c*t, c*)[kappa]
    double g1 = 0, c1 = 0, time = 0;
    const double dt = 0.01, t_end = 40.0;
    auto rhs = [&](double s) { return first_order_maps(*t, c_star * s, kap); };
    const int steps = static_cast<int>(t_end / dt);
    for (int k = 0; k < steps; ++k) {
        const Vec2 k1 = rhs(time);
        const Vec2 k2 = rhs(time + 0.5 * dt);
        const Vec2 k4 = rhs(time + dt);
        g1 += dt / 6.0 * (k1.x + 4.0 * k2.x + k4.x);
        c1 += dt / 6.0 * (k1.y + 4.0 * k2.y + k4.y);
        time += dt;
    }
    CHECK(std::abs(c1 - ev.c1(t_end)) <= 1e-8);
    CHECK(std::abs(g1 - (ev.gamma1_I(t_end) + ev.gamma1_II(t_end))) <= 1e-8);
}

TEST_CASE("c1 covariance: closed form, bound, Monte Carlo") {
    auto& fam = family_1015();
    auto t = fam.tables_at(1.015);
    const double c_star = 1.015;
    CHECK(c1_covariance(*t, c_star, 0.0, 0.0) == 0.0);

    // uniform bound alpha0^{-2}/c^2 ||r||_{l4}^4
    double l4 = 0;
    for (long j = -200; j <= 200; ++j) l4 += std::pow(t->eval(Fn::r, static_cast<double>(j)), 4);
    const double bound = l4 / (sq(c_star) * sq(t->alpha0));
    for (double tt : {3.0, 11.0, 47.0})
        CHECK(c1_covariance(*t, c_star, tt, tt) <= bound * (1.0 + 1e-12));

    // sample variance over 1000 realizations within 3 SE
    const Window win{-120, 361};
    EnsembleConfig ec;
    ec.master_seed = 31;
    const double tt = 10.0;
    RunningStats rs;
    for (int q = 0; q < 1000; ++q) {
        auto coeffs = sample_kappa(ec, q, win);
        FirstOrderEval ev(t, coeffs, c_star);
        rs.add(ev.c1(tt));
    }
    const double var = c1_covariance(*t, c_star, tt, tt);
    CHECK(std::abs(rs.mean) <= 3.0 * rs.stderror());
    const double se_var = var * std::sqrt(2.0 / 999.0);
    CHECK(std::abs(rs.variance() - var) <= 3.0 * se_var);
}

TEST_CASE("second-order corrections vanish for kappa = 0") {
    auto& fam = family_1015();
    const Window win = simulation_window(1.015, 10.0, 90);
    auto coeffs = SpringCoefficients::zero(win.j_min, win.width);
    auto run = second_order_path(fam, coeffs, 1.015, TailVariant::full, 0.05, 10.0, 20);
    for (double v : run.second.gamma2) CHECK(v == 0.0);
    for (double v : run.second.c2) CHECK(v == 0.0);
    for (double v : run.eta_l2) CHECK(v == 0.0);
}
