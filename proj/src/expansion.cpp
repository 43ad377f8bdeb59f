#include "fput/expansion.hpp"

#include <algorithm>
#include <cmath>

namespace fput {

namespace {

// <dxi g(.-xi), f> and <dc g(.-xi), f> for g = r^2, over the union of the
// sequence support and the wave block.
Vec2 r2_derivative_moments(const ProfileFamily::Tables& t, double xi, const RealSeq& f) {
    const double rad = t.support_radius();
    const long lo = std::max(f.j_min, static_cast<long>(std::floor(xi - rad)));
    const long hi = std::min(f.j_max(), static_cast<long>(std::ceil(xi + rad)));
    Vec2 m;
    if (hi < lo) return m;
    const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> dx(n), dc(n);
    t.sample(Fn::dx_r2, xi, lo, n, dx.data());
    t.sample(Fn::dc_r2, xi, lo, n, dc.data());
    for (std::size_t i = 0; i < n; ++i) {
        const double fv = f.v[static_cast<std::size_t>(lo - f.j_min) + i];
        m.x += -dx[i] * fv;  // dxi r^2 = -(r^2)'
        m.y += dc[i] * fv;
    }
    return m;
}

}  // namespace

Vec2 first_order_maps(const ProfileFamily::Tables& t, double xi, const RealSeq& f) {
    const Vec2 m = r2_derivative_moments(t, xi, f);
    return t.A_inv * Vec2{-0.5 * m.x, -0.5 * m.y};
}

Vec2 quadratic_maps(const ProfileFamily::Tables& t, double xi, const RealSeq& f,
                    const RealSeq& g) {
    const double rad = t.support_radius();
    const long lo = static_cast<long>(std::floor(xi - rad));
    const long hi = static_cast<long>(std::ceil(xi + rad));
    const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> dxr(n), dcr(n);
    t.sample(Fn::dx_r, xi, lo, n, dxr.data());
    t.sample(Fn::dc_r, xi, lo, n, dcr.data());
    Vec2 m;
    for (std::size_t i = 0; i < n; ++i) {
        const long j = lo + static_cast<long>(i);
        const double fg = f.at(j) * g.at(j);
        if (fg == 0.0) continue;
        m.x += -dxr[i] * fg;
        m.y += dcr[i] * fg;
    }
    return t.A_inv * Vec2{-m.x, -m.y};
}

Vec2 quadratic_maps_field(const ProfileFamily::Tables& t, double xi,
                          const std::vector<double>& fr, const std::vector<double>& gr,
                          long field_j_min) {
    const double rad = t.support_radius();
    const long lo = std::max(field_j_min, static_cast<long>(std::floor(xi - rad)));
    const long hi = std::min(field_j_min + static_cast<long>(fr.size()) - 1,
                             static_cast<long>(std::ceil(xi + rad)));
    Vec2 m;
    if (hi < lo) return m;
    const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> dxr(n), dcr(n);
    t.sample(Fn::dx_r, xi, lo, n, dxr.data());
    t.sample(Fn::dc_r, xi, lo, n, dcr.data());
    const std::size_t off = static_cast<std::size_t>(lo - field_j_min);
    for (std::size_t i = 0; i < n; ++i) {
        const double fg = fr[off + i] * gr[off + i];
        m.x += -dxr[i] * fg;
        m.y += dcr[i] * fg;
    }
    return t.A_inv * Vec2{-m.x, -m.y};
}

Vec2 mixed_maps(const WaveFrame& frame, const ProfileFamily::Tables& t, const RealSeq& f,
                const LatticeField& h) {
    const Mat2 B = frame.matrix_B(h);
    const Vec2 g10 = first_order_maps(t, frame.xi(), f);
    const Vec2 lead = frame.A_inv() * (B * g10);
    // quadratic part with g = h_r restricted to the window
    const double rad = t.support_radius();
    const long lo = std::max(h.j_min, static_cast<long>(std::floor(frame.xi() - rad)));
    const long hi = std::min(h.j_max(), static_cast<long>(std::ceil(frame.xi() + rad)));
    Vec2 m;
    if (hi >= lo) {
        const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
        std::vector<double> dxr(n), dcr(n);
        t.sample(Fn::dx_r, frame.xi(), lo, n, dxr.data());
        t.sample(Fn::dc_r, frame.xi(), lo, n, dcr.data());
        for (std::size_t i = 0; i < n; ++i) {
            const long j = lo + static_cast<long>(i);
            const double fg = f.at(j) * h.r[h.idx(j)];
            if (fg == 0.0) continue;
            m.x += -dxr[i] * fg;
            m.y += dcr[i] * fg;
        }
    }
    const Vec2 quad = t.A_inv * Vec2{-m.x, -m.y};
    return lead + quad;
}

LatticeField forcing_T10(const WaveFrame& frame, const ProfileFamily::Tables& t,
                         const RealSeq& f) {
    const Vec2 g10 = first_order_maps(t, frame.xi(), f);
    const Window& win = frame.window();
    LatticeField out(win.j_min, win.width);
    // spike part: (0, d-(f r(.-xi)))
    const long jb0 = frame.block_start();
    const std::size_t len = frame.block_len();
    for (std::size_t i = 0; i < len; ++i) {
        const long j = jb0 + static_cast<long>(i);
        const double g = f.at(j) * frame.phi_r()[i];
        if (g == 0.0) continue;
        out.p[out.idx(j)] += g;
        if (out.in_window(j + 1)) out.p[out.idx(j + 1)] -= g;
    }
    frame.add_dxi(out, -g10.x);
    frame.add_dc(out, -g10.y);
    return out;
}

FirstOrderEval::FirstOrderEval(std::shared_ptr<const ProfileFamily::Tables> tables,
                               const SpringCoefficients& coeffs, double c_star)
    : t_(std::move(tables)), coeffs_(coeffs), c_star_(c_star) {
    rad_ = t_->support_radius();
}

template <class F>
double FirstOrderEval::window_sum(double t, F&& per_site) const {
    // sites where either window factor is alive
    const double xi = c_star_ * t;
    const long lo = static_cast<long>(std::floor(std::min(0.0, xi) - rad_));
    const long hi = static_cast<long>(std::ceil(std::max(0.0, xi) + rad_));
    if (lo < coeffs_.j_min || hi > coeffs_.j_max())
        throw Error(ErrorKind::invalid_window,
                    "first-order path: kappa window does not cover the wave track");
    double s = 0;
    for (long j = lo; j <= hi; ++j) {
        const double k = coeffs_.at(j);
        if (k == 0.0) continue;
        s += k * per_site(j, xi);
    }
    return s;
}

double FirstOrderEval::c1(double t) const {
    const double s = window_sum(t, [&](long j, double xi) {
        return t_->eval(Fn::r2, static_cast<double>(j) - xi) -
               t_->eval(Fn::r2, static_cast<double>(j));
    });
    return -s / (2.0 * c_star_ * t_->alpha0);
}

double FirstOrderEval::gamma1_I(double t) const {
    const double s = window_sum(t, [&](long j, double xi) {
        return t_->eval(Fn::r2, static_cast<double>(j) - xi) -
               t_->eval(Fn::r2, static_cast<double>(j));
    });
    return -s * t_->alpha1 / (2.0 * c_star_ * sq(t_->alpha0));
}

double FirstOrderEval::gamma1_II(double t) const {
    const double s = window_sum(t, [&](long j, double xi) {
        return t_->antider_dc_r2(static_cast<double>(j)) -
               t_->antider_dc_r2(static_cast<double>(j) - xi);
    });
    return s / (2.0 * c_star_ * t_->alpha0);
}

double FirstOrderEval::int_c1(double t) const {
    const double s = window_sum(t, [&](long j, double xi) {
        return t_->antider_r2(static_cast<double>(j)) -
               t_->antider_r2(static_cast<double>(j) - xi) -
               xi * t_->eval(Fn::r2, static_cast<double>(j));
    });
    return -s / (2.0 * sq(c_star_) * t_->alpha0);
}

FirstOrderPath first_order_path(std::shared_ptr<const ProfileFamily::Tables> tables,
                                const SpringCoefficients& coeffs, double c_star,
                                const std::vector<double>& t_grid) {
    FirstOrderEval ev(tables, coeffs, c_star);
    FirstOrderPath path;
    path.t = t_grid;
    path.c1.reserve(t_grid.size());
    for (double t : t_grid) {
        path.c1.push_back(ev.c1(t));
        path.gamma1_I.push_back(ev.gamma1_I(t));
        path.gamma1_II.push_back(ev.gamma1_II(t));
        path.xi1.push_back(path.gamma1_I.back() + path.gamma1_II.back() + ev.int_c1(t));
    }
    return path;
}

double c1_covariance(const ProfileFamily::Tables& t, double c_star, double tt, double ss) {
    if (tt < 0 || ss < 0) throw Error(ErrorKind::domain, "c1_covariance: times must be >= 0");
    const double rad = t.support_radius();
    const double xt = c_star * tt, xs = c_star * ss;
    const long lo = static_cast<long>(std::floor(-rad));
    const long hi = static_cast<long>(std::ceil(std::max(xt, xs) + rad));
    double s = 0;
    for (long j = lo; j <= hi; ++j) {
        const double x = static_cast<double>(j);
        const double a = t.eval(Fn::r2, x) - t.eval(Fn::r2, x - xt);
        const double b = t.eval(Fn::r2, x) - t.eval(Fn::r2, x - xs);
        s += a * b;
    }
    return s / (4.0 * sq(c_star) * sq(t.alpha0));
}

}  // namespace fput
