#include "fput/attenuation.hpp"

#include <algorithm>
#include <cmath>

namespace fput {

namespace {

using Tables = ProfileFamily::Tables;

// A^{-1} (d2/dxi2 r^2, d2/(dxi dc) r^2)(x) and the M_IV weight
// dA^{-1} (dxi r^2, dc r^2)(x) + A^{-1} (d2/(dc dxi) r^2, d2/dc2 r^2)(x).
struct CorrWeights {
    const Tables& t;
    Vec2 F(double x) const {
        return t.A_inv * Vec2{t.eval(Fn::dxx_r2, x), -t.eval(Fn::dxc_r2, x)};
    }
    Vec2 G(double x) const {
        const Vec2 a = t.dA_inv * Vec2{-t.eval(Fn::dx_r2, x), t.eval(Fn::dc_r2, x)};
        const Vec2 b = t.A_inv * Vec2{-t.eval(Fn::dxc_r2, x), t.eval(Fn::dcc_r2, x)};
        return a + b;
    }
};

}  // namespace

CorrelationSplit M10_correlations(const ProfileFamily& fam, double xi, double c) {
    auto tp = fam.tables_at(c);
    const Tables& t = *tp;
    CorrWeights w{t};
    const double rad = t.support_radius();
    const double a0 = t.alpha0, a1 = t.alpha1;
    const double Itr = t.total_r2();
    const double Itc = t.total_dc_r2();

    CorrelationSplit out;
    out.xi = xi;
    out.c = c;

    const double kI = a1 / (4.0 * c * sq(a0));
    const double kII = -1.0 / (4.0 * c * a0);
    const double kIII = 1.0 / (4.0 * sq(c) * a0);
    const double kIV = 1.0 / (4.0 * c * a0);

    // totals: sum over the union of the two localization windows
    {
        const long lo = static_cast<long>(std::floor(std::min(0.0, xi) - rad));
        const long hi = static_cast<long>(std::ceil(std::max(0.0, xi) + rad));
        for (long j = lo; j <= hi; ++j) {
            const double x = static_cast<double>(j) - xi;
            if (std::abs(x) > rad) continue;  // F, G localized at the wave
            const Vec2 F = w.F(x);
            const Vec2 G = w.G(x);
            const double r2x = t.eval(Fn::r2, x);
            const double r2j = t.eval(Fn::r2, static_cast<double>(j));
            const double win = r2x - r2j;
            const double intc = t.antider_dc_r2(static_cast<double>(j)) - t.antider_dc_r2(x);
            const double intr =
                t.antider_r2(static_cast<double>(j)) - t.antider_r2(x) - xi * r2j;
            out.total_I = out.total_I + (kI * win) * F;
            out.total_II = out.total_II + (kII * intc) * F;
            out.total_III = out.total_III + (kIII * intr) * F;
            out.total_IV = out.total_IV + (kIV * win) * G;
        }
    }

    // periodic parts at phase p = xi mod 1
    const double p = xi - std::floor(xi);
    {
        const long lo = static_cast<long>(std::floor(p - rad));
        const long hi = static_cast<long>(std::ceil(p + rad));
        Vec2 per{};
        for (long j = lo; j <= hi; ++j) {
            const double x = static_cast<double>(j) - p;
            if (std::abs(x) > rad) continue;
            const Vec2 F = w.F(x);
            const Vec2 G = w.G(x);
            const double r2x = t.eval(Fn::r2, x);
            per = per + (kI * r2x) * F;
            per = per + (kII * (Itc - t.antider_dc_r2(x))) * F;
            per = per + (kIII * (Itr - t.antider_r2(x))) * F;
            per = per + (kIV * r2x) * G;
        }
        out.periodic = per;
    }
    out.transient = out.total() - out.periodic;
    return out;
}

MMaps M_maps(const ProfileFamily& fam, const LimitResponse& Ra, const LimitResponse& Rb) {
    if (Ra.Jmax != Rb.Jmax || Ra.p != Rb.p || Ra.c_star != Rb.c_star)
        throw Error(ErrorKind::domain, "M_maps: mismatched response blocks");
    auto tp = fam.tables_at(Ra.c_star);
    const Tables& t = *tp;
    const long J = Ra.Jmax;
    const double p = Ra.p;
    const Window win{-J, static_cast<std::size_t>(2 * J + 1)};
    WaveFrame frame = WaveFrame::build(t, p, win);

    // block samples of dxi r, dc r, and the per-m forcing tables
    const long jb0 = frame.block_start();
    const std::size_t blen = frame.block_len();
    std::vector<double> dxr(blen), dcr(blen);
    t.sample(Fn::dx_r, p, jb0, blen, dxr.data());
    t.sample(Fn::dc_r, p, jb0, blen, dcr.data());

    Vec2 m02{};   // moment pair (<dxi r, .>, <dc r, .>) accumulated over m
    Vec2 m11q{};  // quadratic part of M11
    Vec2 m11b{};  // A^{-1} B[R(.,m)] (G10,C10)[delta_m] part

    LatticeField col(-J, static_cast<std::size_t>(2 * J + 1));
    const double weight_floor = 1e-300;
    for (long m = -J; m <= J; ++m) {
        for (long j = -J; j <= J; ++j) {
            col.r[col.idx(j)] = Ra.R_r(j, m);
            col.p[col.idx(j)] = Ra.R_p(j, m);
        }
        // quadratic moments against Rb's matching column
        for (std::size_t b = 0; b < blen; ++b) {
            const long j = jb0 + static_cast<long>(b);
            const double prod = Ra.R_r(j, m) * Rb.R_r(j, m);
            if (std::abs(prod) < weight_floor) continue;
            m02.x += -(-dxr[b]) * prod;  // <dxi r, Ra Rb> with dxi r = -dx r
            m02.y += -dcr[b] * prod;     // minus sign of the (0,2) map
        }
        // M11: A^{-1} B[col] (G10, C10)[delta_m] + (G02, C02)[delta_m, col_r]
        const double xm = static_cast<double>(m) - p;
        const Vec2 g10 =
            t.A_inv * Vec2{0.5 * t.eval(Fn::dx_r2, xm), -0.5 * t.eval(Fn::dc_r2, xm)};
        if (std::abs(g10.x) + std::abs(g10.y) > 1e-200) {
            const Mat2 B = frame.matrix_B(col);
            const Vec2 v = frame.A_inv() * (B * g10);
            m11b = m11b + v;
        }
        const double rr = Ra.R_r(m, m);
        m11q.x += -(-t.eval(Fn::dx_r, xm)) * rr;
        m11q.y += -t.eval(Fn::dc_r, xm) * rr;
    }
    MMaps out;
    out.M02 = t.A_inv * m02;
    out.M11 = m11b + (t.A_inv * m11q);
    return out;
}

ResponseSnapshot response_field(const Tables& tables, double c_star, TailVariant variant,
                                double dt, double t) {
    // heterogeneity sites the wave has touched, plus margins
    const double rad = tables.support_radius();
    const long m_lo = -static_cast<long>(std::ceil(rad)) - 4;
    const long m_hi = static_cast<long>(std::ceil(c_star * t + rad)) + 4;
    const long j_lo = -static_cast<long>(std::ceil(t + rad)) - 12;
    const long j_hi = static_cast<long>(std::ceil(c_star * t + rad)) + 12;
    const Window win{j_lo, static_cast<std::size_t>(j_hi - j_lo + 1)};

    ResponseSnapshot out;
    out.t = t;
    out.c_star = c_star;
    out.variant = variant;
    out.j0 = j_lo;
    out.m0 = m_lo;
    out.W = win.width;
    out.M = static_cast<std::size_t>(m_hi - m_lo + 1);
    out.vr.assign(out.W * out.M, 0.0);
    out.vp.assign(out.W * out.M, 0.0);

    for (std::size_t q = 0; q < out.M; ++q) {
        const long m = m_lo + static_cast<long>(q);
        LatticeField R = response(m, tables, c_star, variant, dt, t, win);
        std::copy(R.r.begin(), R.r.end(), out.vr.begin() + q * out.W);
        std::copy(R.p.begin(), R.p.end(), out.vp.begin() + q * out.W);
    }
    return out;
}

Vec2 expected_drift_from_snapshot(const ProfileFamily& fam, const ResponseSnapshot& R) {
    auto tp = fam.tables_at(R.c_star);
    const Tables& t = *tp;
    const double xi = R.c_star * R.t;
    const Window win{R.j0, R.W};
    WaveFrame frame = WaveFrame::build(t, xi, win);

    const long jb0 = frame.block_start();
    const std::size_t blen = frame.block_len();
    std::vector<double> dxr(blen), dcr(blen);
    t.sample(Fn::dx_r, xi, jb0, blen, dxr.data());
    t.sample(Fn::dc_r, xi, jb0, blen, dcr.data());

    Vec2 m02{}, m11q{}, m11b{};
    LatticeField col(R.j0, R.W);
    for (std::size_t q = 0; q < R.M; ++q) {
        const long m = R.m0 + static_cast<long>(q);
        const double* cr = R.vr.data() + q * R.W;
        const double* cp = R.vp.data() + q * R.W;
        std::copy(cr, cr + R.W, col.r.begin());
        std::copy(cp, cp + R.W, col.p.begin());
        for (std::size_t b = 0; b < blen; ++b) {
            const long j = jb0 + static_cast<long>(b);
            const double v = cr[static_cast<std::size_t>(j - R.j0)];
            const double prod = v * v;
            m02.x += dxr[b] * prod;  // -(dxi r) = +dx r
            m02.y += -dcr[b] * prod;
        }
        const double xm = static_cast<double>(m) - xi;
        if (std::abs(xm) <= t.support_radius()) {
            const Vec2 g10 =
                t.A_inv * Vec2{0.5 * t.eval(Fn::dx_r2, xm), -0.5 * t.eval(Fn::dc_r2, xm)};
            const Mat2 B = frame.matrix_B(col);
            m11b = m11b + frame.A_inv() * (B * g10);
            const long im = m - R.j0;
            const double rr = (im >= 0 && im < static_cast<long>(R.W))
                                  ? cr[static_cast<std::size_t>(im)]
                                  : 0.0;
            m11q.x += t.eval(Fn::dx_r, xm) * rr;
            m11q.y += -t.eval(Fn::dc_r, xm) * rr;
        }
    }
    const Vec2 M02 = t.A_inv * m02;
    const Vec2 M11 = m11b + (t.A_inv * m11q);
    const Vec2 M10 = M10_correlations(fam, xi, R.c_star).total();
    return M10 + M02 + M11;
}

Vec2 expected_drift(const ProfileFamily& fam, double t, double c_star, TailVariant variant,
                    double dt) {
    auto tp = fam.tables_at(c_star);
    const ResponseSnapshot R = response_field(*tp, c_star, variant, dt, t);
    return expected_drift_from_snapshot(fam, R);
}

AttenuationRate attenuation_rate(const ProfileFamily& fam, double c, TailVariant variant,
                                 int p_samples, const LimitOptions& lopt) {
    if (p_samples < 1) throw Error(ErrorKind::config, "attenuation_rate: p_samples >= 1");
    // doubled grid for the quadrature convergence check; the requested grid is
    // its even-index subset, all phases riding one response integration
    std::vector<double> p2;
    for (int k = 0; k < 2 * p_samples; ++k) p2.push_back(k / (2.0 * p_samples));
    auto tp = fam.tables_at(c);
    const auto lims = response_limit_grid(*tp, c, variant, p2, lopt);

    AttenuationRate out;
    out.c = c;
    out.variant = variant;
    out.p_samples = p_samples;

    std::vector<Vec2> vals(lims.size());
    for (std::size_t i = 0; i < lims.size(); ++i) {
        const auto mm = M_maps(fam, lims[i], lims[i]);
        const Vec2 per = M10_correlations(fam, lims[i].p, c).periodic;
        vals[i] = per + mm.M02 + mm.M11;
    }
    Vec2 qP{}, q2P{};
    for (std::size_t i = 0; i < vals.size(); ++i) {
        q2P = q2P + (1.0 / (c * vals.size())) * vals[i];
        if (i % 2 == 0) qP = qP + (1.0 / (c * p_samples)) * vals[i];
    }
    out.Q_gamma = qP.x;
    out.Q_c = qP.y;
    out.doubled_check_rel = std::abs(q2P.y - qP.y) / (std::abs(qP.y) + 1e-300);
    if (out.doubled_check_rel > 0.01)
        throw Error(ErrorKind::convergence_failure,
                    "attenuation_rate: p-grid not converged (doubling changed Q_c by > 1%)");
    for (std::size_t i = 0; i < vals.size(); i += 2) {
        out.p_grid.push_back(lims[i].p);
        out.integrand_gamma.push_back(vals[i].x);
        out.integrand_c.push_back(vals[i].y);
    }
    return out;
}

namespace {

// natural cubic spline on ascending nodes
struct Spline {
    std::vector<double> x, y, m;  // second derivatives
    void build(const std::vector<double>& xs, const std::vector<double>& ys) {
        x = xs;
        y = ys;
        const std::size_t n = x.size();
        m.assign(n, 0.0);
        if (n < 3) return;
        std::vector<double> a(n, 0), b(n, 0), cc(n, 0), d(n, 0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            cc[i] = h1 / 6.0;
            d[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        // Thomas solve on the interior
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * cc[i - 1];
            d[i] -= w * d[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m[i] = (d[i] - cc[i] * (i + 2 < n ? m[i + 1] : 0.0)) / b[i];
            if (i == 1) break;
        }
    }
    double eval(double xx) const {
        const std::size_t n = x.size();
        if (n == 1) return y[0];
        std::size_t i = 1;
        while (i + 1 < n && xx > x[i]) ++i;
        const double h = x[i] - x[i - 1];
        const double A = (x[i] - xx) / h, B = (xx - x[i - 1]) / h;
        return A * y[i - 1] + B * y[i] +
               ((A * A * A - A) * m[i - 1] + (B * B * B - B) * m[i]) * h * h / 6.0;
    }
};

}  // namespace

LimitOdePath integrate_limit_ode(const RateTable& table, double c_star, double tau_end,
                                 double dtau) {
    if (table.c.size() < 2 || table.c.size() != table.Q_c.size())
        throw Error(ErrorKind::config, "integrate_limit_ode: rate table too small");
    std::vector<double> xs(table.c.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(table.c[i] > 1.0))
            throw Error(ErrorKind::config, "integrate_limit_ode: table speeds must exceed 1");
        xs[i] = std::log(table.c[i] - 1.0);
    }
    Spline sp;
    sp.build(xs, table.Q_c);
    const double xlo = xs.front(), xhi = xs.back();

    LimitOdePath path;
    bool clipped = false;
    auto rate = [&](double c) {
        double x = std::log(std::max(c - 1.0, 1e-12));
        if (x < xlo || x > xhi) {
            clipped = true;
            x = std::clamp(x, xlo, xhi);
        }
        return sp.eval(x);
    };

    double c = c_star;
    path.tau.push_back(0.0);
    path.c_lim.push_back(c);
    const std::size_t nsteps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tau_end / dtau - 1e-9)));
    const double h = tau_end / static_cast<double>(nsteps);
    for (std::size_t i = 1; i <= nsteps; ++i) {
        const double k1 = rate(c);
        const double k2 = rate(c + 0.5 * h * k1);
        const double k3 = rate(c + 0.5 * h * k2);
        const double k4 = rate(c + h * k3);
        c += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        path.tau.push_back(static_cast<double>(i) * h);
        path.c_lim.push_back(c);
    }
    path.clipped = clipped;
    return path;
}

}  // namespace fput
