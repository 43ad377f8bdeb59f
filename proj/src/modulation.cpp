#include "fput/modulation.hpp"

#include <algorithm>
#include <cmath>

namespace fput {

double omega(const LatticeField& f, const LatticeField& g) {
    return inner(apply_J_inverse(f), g);
}

double weighted_l2(const LatticeField& u, double xi, double a) {
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u.r[i] == 0.0 && u.p[i] == 0.0) continue;
        const double j = static_cast<double>(u.j_min + static_cast<long>(i));
        const double w = std::exp(a * (j - xi));
        s += w * w * (u.r[i] * u.r[i] + u.p[i] * u.p[i]);
    }
    return std::sqrt(s);
}

namespace {

WaveFrame::Pairer make_pairer(const std::vector<double>& fr, const std::vector<double>& fp) {
    WaveFrame::Pairer pr;
    pr.wr = prefix_sum_inclusive(fp);
    pr.wp = prefix_sum_strict(fr);
    pr.tail_r = pr.wr.empty() ? 0.0 : pr.wr.back();
    // strict prefix: the constant right of the block includes the last entry
    pr.tail_p = pr.wp.empty() ? 0.0 : pr.wp.back() + (fr.empty() ? 0.0 : fr.back());
    return pr;
}

}  // namespace

WaveFrame WaveFrame::build(const ProfileFamily::Tables& t, double xi, const Window& win) {
    WaveFrame f;
    f.xi_ = xi;
    f.c_ = t.c;
    f.win_ = win;
    f.alpha0_ = t.alpha0;
    f.alpha1_ = t.alpha1;
    f.A_ = t.A;
    f.Ainv_ = t.A_inv;

    const double rad = t.support_radius();
    long jb0 = static_cast<long>(std::floor(xi - rad));
    long jb1 = static_cast<long>(std::ceil(xi + rad));
    jb0 = std::max(jb0, win.j_min);
    jb1 = std::min(jb1, win.j_min + static_cast<long>(win.width) - 1);
    if (jb1 < jb0) throw Error(ErrorKind::invalid_window, "wave frame: block outside window");
    f.jb0_ = jb0;
    f.len_ = static_cast<std::size_t>(jb1 - jb0 + 1);
    const std::size_t n = f.len_;

    auto fill = [&](Fn fn, std::vector<double>& dst) {
        dst.resize(n);
        t.sample(fn, xi, jb0, n, dst.data());
    };
    fill(Fn::r, f.phi_r_);
    fill(Fn::p, f.phi_p_);
    fill(Fn::dx_r, f.dxi_r_);
    fill(Fn::dx_p, f.dxi_p_);
    for (auto& v : f.dxi_r_) v = -v;
    for (auto& v : f.dxi_p_) v = -v;
    fill(Fn::dc_r, f.dc_r_);
    fill(Fn::dc_p, f.dc_p_);
    fill(Fn::dxx_r, f.dxixi_r_);
    fill(Fn::dxx_p, f.dxixi_p_);
    fill(Fn::dxc_r, f.dxic_r_);
    fill(Fn::dxc_p, f.dxic_p_);
    for (auto& v : f.dxic_r_) v = -v;
    for (auto& v : f.dxic_p_) v = -v;
    fill(Fn::dcc_r, f.dcc_r_);
    fill(Fn::dcc_p, f.dcc_p_);

    f.pr_dxi_ = make_pairer(f.dxi_r_, f.dxi_p_);
    f.pr_dc_ = make_pairer(f.dc_r_, f.dc_p_);
    f.pr_dxixi_ = make_pairer(f.dxixi_r_, f.dxixi_p_);
    f.pr_dxic_ = make_pairer(f.dxic_r_, f.dxic_p_);
    f.pr_dcc_ = make_pairer(f.dcc_r_, f.dcc_p_);
    return f;
}

WaveFrame WaveFrame::build(const ProfileFamily& fam, double xi, double c, const Window& win) {
    WaveFrame f;
    f.xi_ = xi;
    f.c_ = c;
    f.win_ = win;
    f.alpha0_ = fam.alpha0(c);
    f.alpha1_ = fam.alpha1(c);
    f.A_ = fam.matrix_A(c);
    f.Ainv_ = fam.matrix_A_inv(c);

    const double rad = fam.support_radius(c);
    long jb0 = static_cast<long>(std::floor(xi - rad));
    long jb1 = static_cast<long>(std::ceil(xi + rad));
    jb0 = std::max(jb0, win.j_min);
    jb1 = std::min(jb1, win.j_min + static_cast<long>(win.width) - 1);
    if (jb1 < jb0) throw Error(ErrorKind::invalid_window, "wave frame: block outside window");
    f.jb0_ = jb0;
    f.len_ = static_cast<std::size_t>(jb1 - jb0 + 1);
    const std::size_t n = f.len_;

    auto fill = [&](Fn fn, std::vector<double>& dst, double sign) {
        dst.resize(n);
        fam.sample(fn, xi, c, jb0, n, dst.data());
        if (sign < 0)
            for (auto& v : dst) v = -v;
    };
    fill(Fn::r, f.phi_r_, 1);
    fill(Fn::p, f.phi_p_, 1);
    fill(Fn::dx_r, f.dxi_r_, -1);
    fill(Fn::dx_p, f.dxi_p_, -1);
    fill(Fn::dc_r, f.dc_r_, 1);
    fill(Fn::dc_p, f.dc_p_, 1);
    fill(Fn::dxx_r, f.dxixi_r_, 1);
    fill(Fn::dxx_p, f.dxixi_p_, 1);
    fill(Fn::dxc_r, f.dxic_r_, -1);
    fill(Fn::dxc_p, f.dxic_p_, -1);
    fill(Fn::dcc_r, f.dcc_r_, 1);
    fill(Fn::dcc_p, f.dcc_p_, 1);

    f.pr_dxi_ = make_pairer(f.dxi_r_, f.dxi_p_);
    f.pr_dc_ = make_pairer(f.dc_r_, f.dc_p_);
    f.pr_dxixi_ = make_pairer(f.dxixi_r_, f.dxixi_p_);
    f.pr_dxic_ = make_pairer(f.dxic_r_, f.dxic_p_);
    f.pr_dcc_ = make_pairer(f.dcc_r_, f.dcc_p_);
    return f;
}

WaveFrame::TailSums WaveFrame::tail_sums(const LatticeField& eta) const {
    TailSums s;
    const long jb1 = jb0_ + static_cast<long>(len_) - 1;
    const long first = jb1 + 1;
    if (first > eta.j_max()) return s;
    for (long j = std::max(first, eta.j_min); j <= eta.j_max(); ++j) {
        const std::size_t i = eta.idx(j);
        s.r += eta.r[i];
        s.p += eta.p[i];
    }
    return s;
}

double WaveFrame::omega_pair(const Pairer& pr, const LatticeField& eta, const TailSums& s) const {
    double acc = 0;
    for (std::size_t i = 0; i < len_; ++i) {
        const long j = jb0_ + static_cast<long>(i);
        if (!eta.in_window(j)) continue;
        const std::size_t ei = eta.idx(j);
        acc += pr.wr[i] * eta.r[ei] + pr.wp[i] * eta.p[ei];
    }
    return acc + pr.tail_r * s.r + pr.tail_p * s.p;
}

double WaveFrame::pair_dxi(const LatticeField& eta, const TailSums& s) const {
    return omega_pair(pr_dxi_, eta, s);
}

double WaveFrame::pair_dc(const LatticeField& eta, const TailSums& s) const {
    return omega_pair(pr_dc_, eta, s);
}

Mat2 WaveFrame::matrix_B(const LatticeField& eta) const {
    const TailSums s = tail_sums(eta);
    Mat2 B;
    B.a11 = omega_pair(pr_dxixi_, eta, s);
    B.a12 = omega_pair(pr_dxic_, eta, s);
    B.a21 = B.a12;
    B.a22 = omega_pair(pr_dcc_, eta, s);
    return B;
}

Vec2 WaveFrame::jn_pairings(const LatticeField& eta) const {
    Vec2 v;
    for (std::size_t i = 0; i < len_; ++i) {
        const long j = jb0_ + static_cast<long>(i);
        if (!eta.in_window(j)) continue;
        const double er = eta.r[eta.idx(j)];
        v.x -= dxi_r_[i] * er * er;
        v.y -= dc_r_[i] * er * er;
    }
    return v;
}

Vec2 WaveFrame::kappa_pairings(const SpringCoefficients& coeffs, const LatticeField* eta) const {
    Vec2 v;
    for (std::size_t i = 0; i < len_; ++i) {
        const long j = jb0_ + static_cast<long>(i);
        double field = phi_r_[i];
        if (eta && eta->in_window(j)) field += eta->r[eta->idx(j)];
        const double kf = coeffs.at(j) * field;
        v.x += dxi_r_[i] * kf;
        v.y += dc_r_[i] * kf;
    }
    return v;
}

void WaveFrame::add_dxi(LatticeField& y, double s) const {
    for (std::size_t i = 0; i < len_; ++i) {
        const long j = jb0_ + static_cast<long>(i);
        if (!y.in_window(j)) continue;
        const std::size_t yi = y.idx(j);
        y.r[yi] += s * dxi_r_[i];
        y.p[yi] += s * dxi_p_[i];
    }
}

void WaveFrame::add_dc(LatticeField& y, double s) const {
    for (std::size_t i = 0; i < len_; ++i) {
        const long j = jb0_ + static_cast<long>(i);
        if (!y.in_window(j)) continue;
        const std::size_t yi = y.idx(j);
        y.r[yi] += s * dc_r_[i];
        y.p[yi] += s * dc_p_[i];
    }
}

Vec2 gamma_c_maps(const WaveFrame& frame, const SpringCoefficients& coeffs,
                  const LatticeField& eta) {
    const Mat2 B = frame.matrix_B(eta);
    const Mat2 M = frame.A() - B;
    const double margin = std::abs(M.det()) / (sq(frame.alpha0()) + 1e-300);
    if (margin < 0.25)
        throw Error(ErrorKind::coherence_lost, "gamma_c_maps: A - B[eta] near singular");
    Vec2 rhs = frame.jn_pairings(eta);
    const Vec2 kp = frame.kappa_pairings(coeffs, &eta);
    rhs.x -= coeffs.sigma * kp.x;
    rhs.y -= coeffs.sigma * kp.y;
    return M.inverse() * rhs;
}

LatticeField T_map(const WaveFrame& frame, const SpringCoefficients& coeffs,
                   const LatticeField& eta, const Vec2& gamma_c) {
    LatticeField out(eta.j_min, eta.size());
    // p-component: d- of (eta_r^2 + sigma kappa (r + eta_r))
    const std::size_t n = eta.size();
    double prev = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long j = eta.j_min + static_cast<long>(i);
        double g = eta.r[i] * eta.r[i];
        if (coeffs.sigma != 0.0) {
            double field = eta.r[i];
            if (j >= frame.block_start() &&
                j < frame.block_start() + static_cast<long>(frame.block_len()))
                field += frame.phi_r()[static_cast<std::size_t>(j - frame.block_start())];
            g += coeffs.sigma * coeffs.at(j) * field;
        }
        out.p[i] = g - prev;
        prev = g;
    }
    frame.add_dxi(out, -gamma_c.x);
    frame.add_dc(out, -gamma_c.y);
    return out;
}

FitResult fit_modulation(const LatticeField& u, double xi_guess, double c_guess,
                         const ProfileFamily& fam, const FitOptions& opt) {
    Window win{u.j_min, u.size()};
    double xi = xi_guess, c = c_guess;

    auto residual = [&](double x, double cc, LatticeField* eta_out) {
        WaveFrame frame = WaveFrame::build(fam, x, cc, win);
        LatticeField eta = u;
        for (std::size_t i = 0; i < frame.block_len(); ++i) {
            const long j = frame.block_start() + static_cast<long>(i);
            const std::size_t ui = eta.idx(j);
            eta.r[ui] -= frame.phi_r()[i];
            eta.p[ui] -= frame.phi_p()[i];
        }
        const auto s = frame.tail_sums(eta);
        Vec2 F{frame.pair_dxi(eta, s), frame.pair_dc(eta, s)};
        if (eta_out) *eta_out = std::move(eta);
        return F;
    };

    Vec2 F = residual(xi, c, nullptr);
    double fnorm = std::hypot(F.x, F.y);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        const double hx = 1e-6, hc = 1e-7;
        const Vec2 Fx = residual(xi + hx, c, nullptr);
        const Vec2 Fc = residual(xi, c + hc, nullptr);
        const Mat2 J{(Fx.x - F.x) / hx, (Fc.x - F.x) / hc, (Fx.y - F.y) / hx, (Fc.y - F.y) / hc};
        if (J.det() == 0.0) throw Error(ErrorKind::coherence_lost, "fit: singular Jacobian");
        const Vec2 step = J.inverse() * F;
        double damp = 1.0;
        double nxi = xi, nc = c;
        Vec2 nF{};
        double nnorm = 0;
        for (int half = 0; half < 10; ++half) {
            nxi = xi - damp * step.x;
            nc = c - damp * step.y;
            nc = std::clamp(nc, fam.c_lo(), fam.c_hi());
            nF = residual(nxi, nc, nullptr);
            nnorm = std::hypot(nF.x, nF.y);
            if (nnorm <= fnorm || fnorm == 0.0) break;
            damp *= 0.5;
        }
        const bool converged =
            std::abs(nxi - xi) <= opt.step_tol * (1.0 + std::abs(xi)) &&
            std::abs(nc - c) <= opt.step_tol;
        xi = nxi;
        c = nc;
        F = nF;
        fnorm = nnorm;
        if (converged) break;
    }
    if (it >= opt.max_iter)
        throw Error(ErrorKind::convergence_failure, "fit_modulation: Newton did not converge");

    FitResult res;
    res.xi = xi;
    res.c = c;
    res.iterations = it + 1;
    F = residual(xi, c, &res.eta);
    res.resid_dxi = F.x;
    res.resid_dc = F.y;
    res.eta_l2 = res.eta.l2_norm();
    const double a = ProfileFamily::weight_a(c);
    res.eta_weighted = weighted_l2(res.eta, xi, a);
    if (opt.check_coherence) {
        WaveFrame frame = WaveFrame::build(fam, xi, c, win);
        double wphi = 0;
        for (std::size_t i = 0; i < frame.block_len(); ++i) {
            const double j = static_cast<double>(frame.block_start() + static_cast<long>(i));
            const double w = std::exp(a * (j - xi));
            wphi += w * w * (sq(frame.phi_r()[i]) + sq(frame.phi_p()[i]));
        }
        wphi = std::sqrt(wphi);
        if (res.eta_weighted > opt.coherence_ratio * wphi)
            throw Error(ErrorKind::coherence_lost,
                        "fit_modulation: deviation too large, wave coherence lost");
    }
    return res;
}

namespace {

struct ModVec {
    double gamma = 0, c = 0, xi = 0;
    LatticeField eta;

    void axpy(double a, const ModVec& k) {
        gamma += a * k.gamma;
        c += a * k.c;
        xi += a * k.xi;
        for (std::size_t i = 0; i < eta.size(); ++i) {
            eta.r[i] += a * k.eta.r[i];
            eta.p[i] += a * k.eta.p[i];
        }
    }
};

void mod_rhs(const ModVec& s, const SpringCoefficients& coeffs, const ProfileFamily& fam,
             ModVec& out) {
    Window win{s.eta.j_min, s.eta.size()};
    WaveFrame frame = WaveFrame::build(fam, s.xi, s.c, win);
    const Vec2 gc = gamma_c_maps(frame, coeffs, s.eta);

    out.gamma = gc.x;
    out.c = gc.y;
    out.xi = s.c + gc.x;
    out.eta.j_min = s.eta.j_min;
    out.eta.r.assign(s.eta.size(), 0.0);
    out.eta.p.assign(s.eta.size(), 0.0);

    // etadot = J L eta + T, assembled in one pass:
    //   r: d+ eta_p
    //   p: d-[(1 + 2 r_{xi,c}) eta_r + eta_r^2 + sigma kappa (r_{xi,c} + eta_r)]
    // then the -Gamma dxi phi - C dc phi corrections.
    const std::size_t n = s.eta.size();
    for (std::size_t i = 0; i + 1 < n; ++i) out.eta.r[i] = s.eta.p[i + 1] - s.eta.p[i];
    out.eta.r[n - 1] = -s.eta.p[n - 1];
    double prev = 0;
    const long jb0 = frame.block_start();
    const long jb1 = jb0 + static_cast<long>(frame.block_len()) - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const long j = s.eta.j_min + static_cast<long>(i);
        double rprof = 0;
        if (j >= jb0 && j <= jb1) rprof = frame.phi_r()[static_cast<std::size_t>(j - jb0)];
        const double er = s.eta.r[i];
        double g = (1.0 + 2.0 * rprof) * er + er * er;
        if (coeffs.sigma != 0.0) g += coeffs.sigma * coeffs.at(j) * (rprof + er);
        out.eta.p[i] = g - prev;
        prev = g;
    }
    frame.add_dxi(out.eta, -gc.x);
    frame.add_dc(out.eta, -gc.y);
}

}  // namespace

ModulationState integrate_modulation(const ModulationState& init, const SpringCoefficients& coeffs,
                                     const ProfileFamily& fam, double dt, double t_end,
                                     const std::function<void(const ModObserverPoint&)>& observer,
                                     std::size_t observer_stride) {
    if (!(dt > 0) || dt > 0.5) throw Error(ErrorKind::domain, "integrate_modulation: bad dt");
    ModVec s{init.gamma, init.c, init.xi, init.eta};
    ModVec k1, k2, k3, k4, tmp;

    auto observe = [&](double t) {
        if (!observer) return;
        Window win{s.eta.j_min, s.eta.size()};
        WaveFrame frame = WaveFrame::build(fam, s.xi, s.c, win);
        const auto ts = frame.tail_sums(s.eta);
        ModObserverPoint pt;
        pt.t = t;
        pt.gamma = s.gamma;
        pt.c = s.c;
        pt.xi = s.xi;
        pt.eta_l2 = s.eta.l2_norm();
        pt.eta_weighted = weighted_l2(s.eta, s.xi, ProfileFamily::weight_a(s.c));
        pt.ortho_dxi = frame.pair_dxi(s.eta, ts);
        pt.ortho_dc = frame.pair_dc(s.eta, ts);
        const Mat2 M = frame.A() - frame.matrix_B(s.eta);
        pt.ab_margin = std::abs(M.det()) / sq(frame.alpha0());
        observer(pt);
    };

    double t = 0;
    std::size_t step = 0;
    observe(t);
    const double eps = 1e-12;
    while (t < t_end - eps) {
        const double h = std::min(dt, t_end - t);
        mod_rhs(s, coeffs, fam, k1);
        tmp = s;
        tmp.axpy(0.5 * h, k1);
        mod_rhs(tmp, coeffs, fam, k2);
        tmp = s;
        tmp.axpy(0.5 * h, k2);
        mod_rhs(tmp, coeffs, fam, k3);
        tmp = s;
        tmp.axpy(h, k3);
        mod_rhs(tmp, coeffs, fam, k4);
        s.axpy(h / 6.0, k1);
        s.axpy(h / 3.0, k2);
        s.axpy(h / 3.0, k3);
        s.axpy(h / 6.0, k4);
        t += h;
        ++step;
        if (step % 100 == 0 && !std::isfinite(s.eta.sup_norm()))
            throw Error(ErrorKind::diverged, "integrate_modulation diverged");
        if (step % observer_stride == 0 || t >= t_end - eps) observe(t);
    }
    return ModulationState{s.gamma, s.c, s.xi, std::move(s.eta)};
}

}  // namespace fput
