#include "fput/tail.hpp"

#include <algorithm>
#include <cmath>

#include "fput/bessel.hpp"

namespace fput {

namespace {

using Tables = ProfileFamily::Tables;

// (Gamma^{1,0}, C^{1,0})(xi)[kappa] from the moment sums over the wave block.
Vec2 g10_kappa(const Tables& t, double xi, const SpringCoefficients& coeffs) {
    const double rad = t.support_radius();
    const long lo = std::max(coeffs.j_min, static_cast<long>(std::floor(xi - rad)));
    const long hi = std::min(coeffs.j_max(), static_cast<long>(std::ceil(xi + rad)));
    Vec2 m;
    if (hi < lo) return t.A_inv * m;
    const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> dx(n), dc(n);
    t.sample(Fn::dx_r2, xi, lo, n, dx.data());
    t.sample(Fn::dc_r2, xi, lo, n, dc.data());
    for (std::size_t i = 0; i < n; ++i) {
        const double k = coeffs.kappa[static_cast<std::size_t>(lo - coeffs.j_min) + i];
        m.x += -dx[i] * k;
        m.y += dc[i] * k;
    }
    return t.A_inv * Vec2{-0.5 * m.x, -0.5 * m.y};
}

// etadot = J A eta (+ optional T^{1,0}[kappa]) in one pass over the window.
void tail_rhs(const Tables& t, const WaveFrame& frame, TailVariant variant,
              const SpringCoefficients* coeffs, const Vec2* g10, const LatticeField& eta,
              LatticeField& out) {
    const std::size_t n = eta.size();
    out.j_min = eta.j_min;
    out.r.resize(n);
    out.p.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) out.r[i] = eta.p[i + 1] - eta.p[i];
    out.r[n - 1] = -eta.p[n - 1];

    const long jb0 = frame.block_start();
    const long jb1 = jb0 + static_cast<long>(frame.block_len()) - 1;
    double prev = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long j = eta.j_min + static_cast<long>(i);
        double g = eta.r[i];
        const bool in_block = (j >= jb0 && j <= jb1);
        if (in_block) {
            const double rprof = frame.phi_r()[static_cast<std::size_t>(j - jb0)];
            if (variant == TailVariant::full) g += 2.0 * rprof * eta.r[i];
            if (coeffs) g += coeffs->at(j) * rprof;  // spike part of T^{1,0}[kappa]
        }
        out.p[i] = g - prev;
        prev = g;
    }
    if (coeffs && g10) {
        frame.add_dxi(out, -g10->x);
        frame.add_dc(out, -g10->y);
    }
}

void field_axpy(LatticeField& y, double a, const LatticeField& x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.r[i] += a * x.r[i];
        y.p[i] += a * x.p[i];
    }
}

}  // namespace

LatticeField integrate_tail(const Tables& tables, const SpringCoefficients& coeffs, double c_star,
                            TailVariant variant, double dt, double t_end, const Window& win,
                            const std::function<void(double, const LatticeField&)>& observer,
                            std::size_t observer_stride) {
    if (!(dt > 0) || dt > 0.5) throw Error(ErrorKind::domain, "integrate_tail: bad dt");
    LatticeField eta(win.j_min, win.width);
    LatticeField k1 = eta, k2 = eta, k3 = eta, k4 = eta, tmp = eta;

    auto rhs_at = [&](double s, const LatticeField& e, LatticeField& out) {
        WaveFrame frame = WaveFrame::build(tables, c_star * s, win);
        const Vec2 g10 = g10_kappa(tables, c_star * s, coeffs);
        tail_rhs(tables, frame, variant, &coeffs, &g10, e, out);
    };

    double t = 0;
    std::size_t step = 0;
    if (observer) observer(t, eta);
    const double eps = 1e-12;
    while (t < t_end - eps) {
        const double h = std::min(dt, t_end - t);
        rhs_at(t, eta, k1);
        tmp = eta;
        field_axpy(tmp, 0.5 * h, k1);
        rhs_at(t + 0.5 * h, tmp, k2);
        tmp = eta;
        field_axpy(tmp, 0.5 * h, k2);
        rhs_at(t + 0.5 * h, tmp, k3);
        tmp = eta;
        field_axpy(tmp, h, k3);
        rhs_at(t + h, tmp, k4);
        field_axpy(eta, h / 6.0, k1);
        field_axpy(eta, h / 3.0, k2);
        field_axpy(eta, h / 3.0, k3);
        field_axpy(eta, h / 6.0, k4);
        t += h;
        ++step;
        if (step % 200 == 0 && !std::isfinite(eta.sup_norm()))
            throw Error(ErrorKind::diverged, "integrate_tail diverged");
        if (observer && (step % observer_stride == 0 || t >= t_end - eps)) observer(t, eta);
    }
    return eta;
}

LatticeField evolve_linearized(const Tables& tables, double c_star, TailVariant variant,
                               const LatticeField& w0, double t_start, double t_end, double dt) {
    LatticeField w = w0;
    LatticeField k1 = w, k2 = w, k3 = w, k4 = w, tmp = w;
    const Window win{w.j_min, w.size()};
    auto rhs_at = [&](double s, const LatticeField& e, LatticeField& out) {
        WaveFrame frame = WaveFrame::build(tables, c_star * s, win);
        tail_rhs(tables, frame, variant, nullptr, nullptr, e, out);
    };
    double t = t_start;
    const double eps = 1e-12;
    while (t < t_end - eps) {
        const double h = std::min(dt, t_end - t);
        rhs_at(t, w, k1);
        tmp = w;
        field_axpy(tmp, 0.5 * h, k1);
        rhs_at(t + 0.5 * h, tmp, k2);
        tmp = w;
        field_axpy(tmp, 0.5 * h, k2);
        rhs_at(t + 0.5 * h, tmp, k3);
        tmp = w;
        field_axpy(tmp, h, k3);
        rhs_at(t + h, tmp, k4);
        field_axpy(w, h / 6.0, k1);
        field_axpy(w, h / 3.0, k2);
        field_axpy(w, h / 3.0, k3);
        field_axpy(w, h / 6.0, k4);
        t += h;
    }
    return w;
}

LatticeField response(long m, const Tables& tables, double c_star, TailVariant variant, double dt,
                      double t_end, const Window& win) {
    std::vector<double> kap(win.width, 0.0);
    if (m < win.j_min || m > win.j_min + static_cast<long>(win.width) - 1)
        throw Error(ErrorKind::invalid_window, "response: site m outside window");
    kap[static_cast<std::size_t>(m - win.j_min)] = 1.0;
    SpringCoefficients delta(win.j_min, kap, 0.0, 1.0);
    return integrate_tail(tables, delta, c_star, variant, dt, t_end, win);
}

// ---------------------------------------------------------------------------
// Batched response integration over a range of heterogeneity sites.

namespace {

struct Batch {
    long j0 = 0, m0 = 0;
    std::size_t W = 0, M = 0;
    std::vector<double> vr, vp;  // [m][j]

    void resize(long j0_, std::size_t W_, long m0_, std::size_t M_) {
        j0 = j0_;
        W = W_;
        m0 = m0_;
        M = M_;
        vr.assign(W * M, 0.0);
        vp.assign(W * M, 0.0);
    }
    void axpy(double a, const Batch& x) {
        for (std::size_t i = 0; i < vr.size(); ++i) {
            vr[i] += a * x.vr[i];
            vp[i] += a * x.vp[i];
        }
    }
};

class ResponseBatch {
  public:
    ResponseBatch(const Tables& t, double c_star, TailVariant variant, long j0, std::size_t W,
                  long m0, std::size_t M)
        : tab_(t), c_star_(c_star), variant_(variant) {
        state_.resize(j0, W, m0, M);
        k1_ = k2_ = k3_ = k4_ = tmp_ = state_;
        win_ = Window{j0, W};
    }

    const Batch& state() const { return state_; }
    double time() const { return t_; }

    void advance_to(double t_target, double dt) {
        const double eps = 1e-12;
        while (t_ < t_target - eps) {
            const double h = std::min(dt, t_target - t_);
            rhs(t_, state_, k1_);
            tmp_ = state_;
            tmp_.axpy(0.5 * h, k1_);
            rhs(t_ + 0.5 * h, tmp_, k2_);
            tmp_ = state_;
            tmp_.axpy(0.5 * h, k2_);
            rhs(t_ + 0.5 * h, tmp_, k3_);
            tmp_ = state_;
            tmp_.axpy(h, k3_);
            rhs(t_ + h, tmp_, k4_);
            state_.axpy(h / 6.0, k1_);
            state_.axpy(h / 3.0, k2_);
            state_.axpy(h / 3.0, k3_);
            state_.axpy(h / 6.0, k4_);
            t_ += h;
        }
    }

  private:
    void rhs(double s, const Batch& in, Batch& out) {
        const double xi = c_star_ * s;
        const double rad = tab_.support_radius();
        const long jb0 = std::max(win_.j_min, static_cast<long>(std::floor(xi - rad)));
        const long jb1 = std::min(win_.j_min + static_cast<long>(win_.width) - 1,
                                  static_cast<long>(std::ceil(xi + rad)));
        const std::size_t blen = static_cast<std::size_t>(std::max<long>(jb1 - jb0 + 1, 0));
        blk_r_.resize(blen);
        blk_dxi_r_.resize(blen);
        blk_dxi_p_.resize(blen);
        blk_dc_r_.resize(blen);
        blk_dc_p_.resize(blen);
        if (blen) {
            tab_.sample(Fn::r, xi, jb0, blen, blk_r_.data());
            tab_.sample(Fn::dx_r, xi, jb0, blen, blk_dxi_r_.data());
            tab_.sample(Fn::dx_p, xi, jb0, blen, blk_dxi_p_.data());
            for (auto& v : blk_dxi_r_) v = -v;
            for (auto& v : blk_dxi_p_) v = -v;
            tab_.sample(Fn::dc_r, xi, jb0, blen, blk_dc_r_.data());
            tab_.sample(Fn::dc_p, xi, jb0, blen, blk_dc_p_.data());
        }
        // per-m forcing coefficients
        sm1_.resize(in.M);
        sm2_.resize(in.M);
        rm_.resize(in.M);
        mdx_.resize(in.M);
        mdc_.resize(in.M);
        tab_.sample(Fn::dx_r2, xi, in.m0, in.M, mdx_.data());
        tab_.sample(Fn::dc_r2, xi, in.m0, in.M, mdc_.data());
        tab_.sample(Fn::r, xi, in.m0, in.M, rm_.data());
        for (std::size_t q = 0; q < in.M; ++q) {
            const Vec2 g10 = tab_.A_inv * Vec2{0.5 * mdx_[q], -0.5 * mdc_[q]};
            sm1_[q] = -g10.x;
            sm2_[q] = -g10.y;
        }

        const std::size_t W = in.W;
        for (std::size_t q = 0; q < in.M; ++q) {
            const double* er = in.vr.data() + q * W;
            const double* ep = in.vp.data() + q * W;
            double* or_ = out.vr.data() + q * W;
            double* op = out.vp.data() + q * W;
            const long m = in.m0 + static_cast<long>(q);
            const double mr = rm_[q];
            const bool forced = std::abs(static_cast<double>(m) - xi) <= rad;
            // dormant columns: not yet excited and no forcing
            if (!forced) {
                bool alive = false;
                for (std::size_t i = 0; i < W; ++i)
                    if (er[i] != 0.0 || ep[i] != 0.0) {
                        alive = true;
                        break;
                    }
                if (!alive) {
                    std::fill(or_, or_ + W, 0.0);
                    std::fill(op, op + W, 0.0);
                    continue;
                }
            }
            for (std::size_t i = 0; i + 1 < W; ++i) or_[i] = ep[i + 1] - ep[i];
            or_[W - 1] = -ep[W - 1];
            double prev = 0;
            if (variant_ == TailVariant::full && blen) {
                const std::size_t b0 = static_cast<std::size_t>(jb0 - win_.j_min);
                for (std::size_t i = 0; i < W; ++i) {
                    double g = er[i];
                    if (i >= b0 && i < b0 + blen) g += 2.0 * blk_r_[i - b0] * er[i];
                    op[i] = g - prev;
                    prev = g;
                }
            } else {
                for (std::size_t i = 0; i < W; ++i) {
                    op[i] = er[i] - prev;
                    prev = er[i];
                }
            }
            if (forced) {
                const std::size_t b0 = static_cast<std::size_t>(jb0 - win_.j_min);
                const double s1 = sm1_[q], s2 = sm2_[q];
                for (std::size_t b = 0; b < blen; ++b) {
                    or_[b0 + b] += s1 * blk_dxi_r_[b] + s2 * blk_dc_r_[b];
                    op[b0 + b] += s1 * blk_dxi_p_[b] + s2 * blk_dc_p_[b];
                }
                // spike r(m - xi) (delta_m - delta_{m+1}) in the p-component
                const long im = m - win_.j_min;
                if (im >= 0 && im < static_cast<long>(W)) op[im] += mr;
                if (im + 1 >= 0 && im + 1 < static_cast<long>(W)) op[im + 1] -= mr;
            }
        }
    }

    const Tables& tab_;
    double c_star_;
    TailVariant variant_;
    Window win_;
    double t_ = 0;
    Batch state_, k1_, k2_, k3_, k4_, tmp_;
    std::vector<double> blk_r_, blk_dxi_r_, blk_dxi_p_, blk_dc_r_, blk_dc_p_;
    std::vector<double> sm1_, sm2_, rm_, mdx_, mdc_;
};

}  // namespace

double LimitResponse::weighted_norm() const {
    double s = 0;
    for (long m = -Jmax; m <= Jmax; ++m)
        for (long j = -Jmax; j <= Jmax; ++j) {
            const double w = std::exp(2.0 * a * static_cast<double>(j));
            s += w * (sq(R_r(j, m)) + sq(R_p(j, m)));
        }
    return std::sqrt(s);
}

std::vector<LimitResponse> response_limit_grid(const Tables& tables, double c_star,
                                               TailVariant variant,
                                               const std::vector<double>& p_grid,
                                               const LimitOptions& opt) {
    if (opt.tol < 1e-8 * 0.999)
        throw Error(ErrorKind::domain, "response_limit: tol must be >= 1e-8");
    const double eps_c = tables.epsilon();
    const long Jmax = opt.Jmax > 0 ? opt.Jmax : static_cast<long>(std::ceil(40.0 / eps_c)) + 20;
    const double a = 0.25 * eps_c;
    const long side = 2 * Jmax + 1;
    const int n_cap = opt.n_cap > 0 ? opt.n_cap : static_cast<int>(Jmax) + 90;

    const double t_max = (n_cap + 1.0) / c_star;
    const long j_lo = std::min(-Jmax, -static_cast<long>(std::ceil(t_max))) - 16;
    const long j_hi = n_cap + Jmax + 16;
    const std::size_t W = static_cast<std::size_t>(j_hi - j_lo + 1);
    const long m_lo = -Jmax - 2;
    const std::size_t M = static_cast<std::size_t>(Jmax + n_cap + 2 - m_lo + 1);

    ResponseBatch batch(tables, c_star, variant, j_lo, W, m_lo, M);

    struct PerP {
        LimitResponse lim;
        std::vector<double> prev;  // previous shifted block (vr, vp concatenated)
        bool converged = false;
    };
    std::vector<PerP> acc(p_grid.size());
    for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
        acc[pi].lim.variant = variant;
        acc[pi].lim.c_star = c_star;
        acc[pi].lim.p = p_grid[pi];
        acc[pi].lim.a = a;
        acc[pi].lim.Jmax = Jmax;
    }

    const std::size_t block_elems = static_cast<std::size_t>(side) * side;
    std::vector<double> cur(2 * block_elems);

    // snapshot times must be visited in order, so walk the phases ascending
    std::vector<std::size_t> p_order(p_grid.size());
    for (std::size_t i = 0; i < p_order.size(); ++i) p_order[i] = i;
    std::sort(p_order.begin(), p_order.end(),
              [&](std::size_t a, std::size_t b) { return p_grid[a] < p_grid[b]; });

    bool all_converged = false;
    for (int n = opt.n0; n <= n_cap && !all_converged; n += opt.dn) {
        for (std::size_t pi : p_order) {
            const double tn = (n + p_grid[pi]) / c_star;
            batch.advance_to(tn, opt.dt);
            auto& A = acc[pi];
            // extract shifted block R(j + n, m + n)
            for (long m = -Jmax; m <= Jmax; ++m) {
                const std::size_t q = static_cast<std::size_t>(m + n - m_lo);
                const double* br = batch.state().vr.data() + q * W;
                const double* bp = batch.state().vp.data() + q * W;
                for (long j = -Jmax; j <= Jmax; ++j) {
                    const std::size_t bi = static_cast<std::size_t>(j + n - j_lo);
                    const std::size_t oi =
                        static_cast<std::size_t>((m + Jmax) * side + (j + Jmax));
                    cur[oi] = br[bi];
                    cur[block_elems + oi] = bp[bi];
                }
            }
            if (!A.prev.empty() && !A.converged) {
                double d2 = 0;
                for (long m = -Jmax; m <= Jmax; ++m)
                    for (long j = -Jmax; j <= Jmax; ++j) {
                        const std::size_t oi =
                            static_cast<std::size_t>((m + Jmax) * side + (j + Jmax));
                        const double w = std::exp(2.0 * a * static_cast<double>(j));
                        d2 += w * (sq(cur[oi] - A.prev[oi]) +
                                   sq(cur[block_elems + oi] - A.prev[block_elems + oi]));
                    }
                const double d = std::sqrt(d2);
                A.lim.shift_n.push_back(n);
                A.lim.distances.push_back(d);
                if (d <= opt.tol) A.converged = true;
            }
            A.prev = cur;
        }
        all_converged = true;
        for (const auto& A : acc) all_converged = all_converged && A.converged;
    }

    std::vector<LimitResponse> out;
    out.reserve(p_grid.size());
    for (auto& A : acc) {
        if (!A.converged)
            throw Error(ErrorKind::convergence_failure,
                        "response_limit: no convergence within the shift cap");
        // geometric rate from the distance sequence
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < A.lim.distances.size(); ++i) {
            if (A.lim.distances[i] <= 0) continue;
            xs.push_back(A.lim.shift_n[i]);
            ys.push_back(std::log(A.lim.distances[i]));
        }
        const LineFit fit = fit_line(xs, ys);
        A.lim.rate_q = -fit.slope;
        if (!(A.lim.rate_q > 0))
            throw Error(ErrorKind::convergence_failure,
                        "response_limit: non-geometric convergence (rate fit q <= 0)");
        A.lim.n_converged = static_cast<int>(A.lim.shift_n.back());
        A.lim.vr.assign(A.prev.begin(), A.prev.begin() + block_elems);
        A.lim.vp.assign(A.prev.begin() + block_elems, A.prev.end());
        // weighted mass of the outer j-rows relative to the total
        double edge = 0, total = 0;
        for (long m = -Jmax; m <= Jmax; ++m)
            for (long j = -Jmax; j <= Jmax; ++j) {
                const double w = std::exp(2.0 * a * static_cast<double>(j));
                const double v = w * (sq(A.lim.R_r(j, m)) + sq(A.lim.R_p(j, m)));
                total += v;
                if (std::abs(j) > Jmax - 3) edge += v;
            }
        A.lim.edge_mass_ratio = total > 0 ? std::sqrt(edge / total) : 0.0;
        out.push_back(std::move(A.lim));
    }
    return out;
}

LimitResponse response_limit(const Tables& tables, double c_star, double p, TailVariant variant,
                             double tol) {
    LimitOptions opt;
    opt.tol = tol;
    auto v = response_limit_grid(tables, c_star, variant, {p}, opt);
    return std::move(v.front());
}

LimitResponse homogeneous_limit_quadrature(const Tables& tables, double c_star, double p,
                                           long Jmax, double dtau) {
    LimitResponse lim;
    lim.variant = TailVariant::homogeneous;
    lim.c_star = c_star;
    lim.p = p;
    lim.a = 0.25 * tables.epsilon();
    lim.Jmax = Jmax;
    const long side = 2 * Jmax + 1;
    lim.vr.assign(static_cast<std::size_t>(side) * side, 0.0);
    lim.vp.assign(static_cast<std::size_t>(side) * side, 0.0);

    const double rad = tables.support_radius();
    const double tau_max = (static_cast<double>(Jmax) + rad + 12.0) / c_star;
    const std::size_t nsteps = static_cast<std::size_t>(std::ceil(tau_max / dtau));

    for (std::size_t it = 0; it <= nsteps; ++it) {
        const double tau = static_cast<double>(it) * dtau;
        // composite Simpson-like weights (trapezoid ends, alternating interior)
        double w = (it == 0 || it == nsteps) ? 1.0 : ((it % 2) ? 4.0 : 2.0);
        w *= dtau / 3.0;

        const double xi = p - c_star * tau;  // co-moving wave position at lookback tau
        const long klo = static_cast<long>(std::floor(xi - rad));
        const long khi = static_cast<long>(std::ceil(xi + rad));
        const std::size_t blen = static_cast<std::size_t>(khi - klo + 1);
        std::vector<double> gr(blen), gp(blen), hr(blen), hp(blen), rv(blen);
        tables.sample(Fn::dx_r, xi, klo, blen, gr.data());
        tables.sample(Fn::dx_p, xi, klo, blen, gp.data());
        for (auto& v : gr) v = -v;
        for (auto& v : gp) v = -v;
        tables.sample(Fn::dc_r, xi, klo, blen, hr.data());
        tables.sample(Fn::dc_p, xi, klo, blen, hp.data());
        tables.sample(Fn::r, xi, klo, blen, rv.data());

        WaveKernel kernel(tau);
        const long K = kernel.cutoff();

        // convolutions conv_g(j) = sum_k Phi(j-k, tau) (g_r, g_p)(k)
        std::vector<double> cg_r(side, 0.0), cg_p(side, 0.0), ch_r(side, 0.0), ch_p(side, 0.0);
        for (long j = -Jmax; j <= Jmax; ++j) {
            double agr = 0, agp = 0, ahr = 0, ahp = 0;
            const long dlo = std::max(j - khi, -K);
            const long dhi = std::min(j - klo, K);
            for (long d = dlo; d <= dhi; ++d) {
                const Mat2 phi = kernel.at(d);
                const std::size_t b = static_cast<std::size_t>(j - d - klo);
                agr += phi.a11 * gr[b] + phi.a12 * gp[b];
                agp += phi.a21 * gr[b] + phi.a22 * gp[b];
                ahr += phi.a11 * hr[b] + phi.a12 * hp[b];
                ahp += phi.a21 * hr[b] + phi.a22 * hp[b];
            }
            cg_r[static_cast<std::size_t>(j + Jmax)] = agr;
            cg_p[static_cast<std::size_t>(j + Jmax)] = agp;
            ch_r[static_cast<std::size_t>(j + Jmax)] = ahr;
            ch_p[static_cast<std::size_t>(j + Jmax)] = ahp;
        }

        // active heterogeneity sites at this lookback
        const long mlo = std::max<long>(-Jmax, klo);
        const long mhi = std::min<long>(Jmax, khi);
        for (long m = mlo; m <= mhi; ++m) {
            const std::size_t b = static_cast<std::size_t>(m - klo);
            const double mdx = -tables.eval(Fn::dx_r2, static_cast<double>(m) - xi);
            const double mdc = tables.eval(Fn::dc_r2, static_cast<double>(m) - xi);
            const Vec2 g10 = tables.A_inv * Vec2{-0.5 * mdx, -0.5 * mdc};
            const double s1 = -g10.x, s2 = -g10.y;
            const double mr = rv[b];
            for (long j = -Jmax; j <= Jmax; ++j) {
                const std::size_t oi = lim.idx(j, m);
                const std::size_t ji = static_cast<std::size_t>(j + Jmax);
                double addr = s1 * cg_r[ji] + s2 * ch_r[ji];
                double addp = s1 * cg_p[ji] + s2 * ch_p[ji];
                // spike: r(m - xi) [Phi(j-m) - Phi(j-m-1)] (0,1)^T
                const Mat2 f1 = kernel.at(j - m);
                const Mat2 f2 = kernel.at(j - m - 1);
                addr += mr * (f1.a12 - f2.a12);
                addp += mr * (f1.a22 - f2.a22);
                lim.vr[oi] += w * addr;
                lim.vp[oi] += w * addp;
            }
        }
    }
    return lim;
}

LimitTailCurves limiting_tail(const std::vector<LimitResponse>& Rset,
                              const std::function<double(long)>& zeta, long j_lo, long j_hi) {
    if (Rset.empty()) throw Error(ErrorKind::domain, "limiting_tail: empty response set");
    const long Jmax = Rset.front().Jmax;

    auto find_phase = [&](double p) -> const LimitResponse& {
        for (const auto& R : Rset)
            if (std::abs(R.p - p) < 1e-9) return R;
        throw Error(ErrorKind::domain, "limiting_tail: phase missing from the response set");
    };

    // x-grid {j - p}, ascending
    std::vector<std::pair<double, std::pair<long, double>>> grid;  // (x, (j, p))
    for (long j = j_lo; j <= j_hi; ++j)
        for (const auto& R : Rset) grid.push_back({static_cast<double>(j) - R.p, {j, R.p}});
    std::sort(grid.begin(), grid.end());

    LimitTailCurves out;
    for (const auto& [x, jp] : grid) {
        const long j = jp.first;
        const double p = jp.second;
        if (j < -Jmax || j > Jmax) continue;
        const LimitResponse& R = find_phase(p);
        double sr = 0, sp = 0, vr = 0, vp = 0;
        for (long m = -Jmax; m <= Jmax; ++m) {
            const double z = zeta(m - j);
            sr += z * R.R_r(j, m);
            sp += z * R.R_p(j, m);
        }
        // variance via the floor representation at the same x
        const long jf = (p > 0) ? j - 1 : j;
        const double pf = (p > 0) ? 1.0 - p : 0.0;
        if (jf >= -Jmax && jf <= Jmax) {
            const LimitResponse& Rf = find_phase(pf);
            for (long m = -Jmax; m <= Jmax; ++m) {
                vr += sq(Rf.R_r(jf, m));
                vp += sq(Rf.R_p(jf, m));
            }
        }
        out.x.push_back(x);
        out.r.push_back(sr);
        out.p.push_back(sp);
        out.std_r.push_back(std::sqrt(vr));
        out.std_p.push_back(std::sqrt(vp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Joint tail + second-order corrections integration.

namespace {

struct CorrState {
    LatticeField eta;
    double gamma2 = 0, c2 = 0;
    void axpy(double a, const CorrState& k) {
        field_axpy(eta, a, k.eta);
        gamma2 += a * k.gamma2;
        c2 += a * k.c2;
    }
};

}  // namespace

ExpansionRun tail_with_corrections(const ProfileFamily& fam, const SpringCoefficients& coeffs,
                                   double c_star, TailVariant variant, double dt, double t_end,
                                   std::size_t grid_stride,
                                   const std::function<void(double, const LatticeField&)>&
                                       eta_observer) {
    const double fd_dc = 1e-4;
    auto t0 = fam.tables_at(c_star);
    auto t_lo = fam.tables_at(c_star - fd_dc);
    auto t_hi = fam.tables_at(c_star + fd_dc);
    FirstOrderEval ev(t0, coeffs, c_star);
    const RealSeq kap = RealSeq::kappa_of(coeffs);

    const Window win{coeffs.j_min, coeffs.size()};
    CorrState s;
    s.eta = LatticeField(win.j_min, win.width);
    CorrState k1, k2, k3, k4, tmp;
    k1 = k2 = k3 = k4 = tmp = s;

    auto rhs_at = [&](double ts, const CorrState& in, CorrState& out) {
        const double xi = c_star * ts;
        WaveFrame frame = WaveFrame::build(*t0, xi, win);
        const Vec2 g10 = g10_kappa(*t0, xi, coeffs);
        tail_rhs(*t0, frame, variant, &coeffs, &g10, in.eta, out.eta);

        // xi1 d/dxi (G10,C10)[kappa] + c1 d/dc (G10,C10)[kappa]
        //   + (G11,C11)[kappa, eta] + (G02,C02)[eta_r, eta_r]
        const double rad = t0->support_radius();
        const long lo = std::max(coeffs.j_min, static_cast<long>(std::floor(xi - rad)));
        const long hi = std::min(coeffs.j_max(), static_cast<long>(std::ceil(xi + rad)));
        Vec2 mm;
        if (hi >= lo) {
            const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
            std::vector<double> dxx(n), dxc(n);
            t0->sample(Fn::dxx_r2, xi, lo, n, dxx.data());
            t0->sample(Fn::dxc_r2, xi, lo, n, dxc.data());
            for (std::size_t i = 0; i < n; ++i) {
                const double k = coeffs.kappa[static_cast<std::size_t>(lo - coeffs.j_min) + i];
                mm.x += dxx[i] * k;    // d2/dxi2 r^2 = +(r^2)''
                mm.y += -dxc[i] * k;   // d2/(dxi dc) r^2 = -(dc r^2)'
            }
        }
        const Vec2 dxi_map = t0->A_inv * Vec2{-0.5 * mm.x, -0.5 * mm.y};
        const Vec2 map_hi = first_order_maps(*t_hi, xi, kap);
        const Vec2 map_lo = first_order_maps(*t_lo, xi, kap);
        const Vec2 dc_map{(map_hi.x - map_lo.x) / (2 * fd_dc), (map_hi.y - map_lo.y) / (2 * fd_dc)};

        const Vec2 g11 = mixed_maps(frame, *t0, kap, in.eta);
        const Vec2 g02 = quadratic_maps_field(*t0, xi, in.eta.r, in.eta.r, in.eta.j_min);

        const double xi1 = ev.xi1(ts);
        const double c1 = ev.c1(ts);
        out.gamma2 = xi1 * dxi_map.x + c1 * dc_map.x + g11.x + g02.x;
        out.c2 = xi1 * dxi_map.y + c1 * dc_map.y + g11.y + g02.y;
    };

    ExpansionRun run;
    run.second.variant = variant;
    auto record = [&](double ts) {
        run.first.t.push_back(ts);
        run.first.c1.push_back(ev.c1(ts));
        run.first.gamma1_I.push_back(ev.gamma1_I(ts));
        run.first.gamma1_II.push_back(ev.gamma1_II(ts));
        run.first.xi1.push_back(ev.xi1(ts));
        run.second.t.push_back(ts);
        run.second.gamma2.push_back(s.gamma2);
        run.second.c2.push_back(s.c2);
        run.eta_l2.push_back(s.eta.l2_norm());
        if (eta_observer) eta_observer(ts, s.eta);
    };

    double t = 0;
    std::size_t step = 0;
    record(t);
    const double eps = 1e-12;
    while (t < t_end - eps) {
        const double h = std::min(dt, t_end - t);
        rhs_at(t, s, k1);
        tmp = s;
        tmp.axpy(0.5 * h, k1);
        rhs_at(t + 0.5 * h, tmp, k2);
        tmp = s;
        tmp.axpy(0.5 * h, k2);
        rhs_at(t + 0.5 * h, tmp, k3);
        tmp = s;
        tmp.axpy(h, k3);
        rhs_at(t + h, tmp, k4);
        s.axpy(h / 6.0, k1);
        s.axpy(h / 3.0, k2);
        s.axpy(h / 3.0, k3);
        s.axpy(h / 6.0, k4);
        t += h;
        ++step;
        if (step % 400 == 0 && !std::isfinite(s.eta.sup_norm()))
            throw Error(ErrorKind::diverged, "tail_with_corrections diverged");
        if (step % grid_stride == 0 || t >= t_end - eps) record(t);
    }
    return run;
}

ExpansionRun second_order_path(const ProfileFamily& fam, const SpringCoefficients& coeffs,
                               double c_star, TailVariant variant, double dt, double t_end,
                               std::size_t grid_stride) {
    return tail_with_corrections(fam, coeffs, c_star, variant, dt, t_end, grid_stride);
}

}  // namespace fput
