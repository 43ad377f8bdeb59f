#include "fput/family.hpp"

#include <algorithm>
#include <cmath>

namespace fput {

namespace {

// 8-point Lagrange weights at fractional offset s in [0, 1), nodes -3..4.
void lagrange8(double s, double* w) {
    static const double denom[8] = {-5040, 720, -240, 144, -144, 240, -720, 5040};
    for (int d = 0; d < 8; ++d) {
        double num = 1.0;
        for (int e = -3; e <= 4; ++e) {
            if (e == d - 3) continue;
            num *= s - static_cast<double>(e);
        }
        w[d] = num / denom[d];
    }
}

std::vector<double> phys_table(Fft& fft, const std::vector<cplx>& spec) {
    std::vector<cplx> phys;
    fft.inverse(spec, phys);
    std::vector<double> out(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) out[i] = phys[i].real();
    return out;
}

std::vector<cplx> mul_ik(const ProfileSolution& s, const std::vector<cplx>& f, int power) {
    std::vector<cplx> out(f.size());
    for (std::size_t m = 0; m < f.size(); ++m) {
        cplx w(1.0, 0.0);
        for (int q = 0; q < power; ++q) w *= cplx(0.0, s.k(m));
        out[m] = w * f[m];
    }
    if (f.size() % 2 == 0 && power > 0) out[f.size() / 2] = 0.0;
    return out;
}

}  // namespace

double ProfileFamily::Tables::support_radius() const {
    return std::min(L - 4.0, 46.0 / epsilon() + 8.0);
}

double ProfileFamily::support_radius(double c) const {
    return std::min(L_ - 4.0, 46.0 / epsilon_of(c) + 8.0);
}

ProfileFamily::ProfileFamily(const Config& cfg) : cfg_(cfg) {
    if (!(cfg.c_lo > 1.0) || !(cfg.c_hi > cfg.c_lo) || cfg.c_hi > 1.1)
        throw Error(ErrorKind::config, "profile family: need 1 < c_lo < c_hi <= 1.1");
    K_ = std::max(5, cfg.nodes);
    if (cfg.N == 0 || cfg.L == 0) {
        default_grid(cfg.c_lo, N_, L_);
    } else {
        N_ = cfg.N;
        L_ = cfg.L;
    }
    g_ = static_cast<long>(std::lround(static_cast<double>(N_) / (2.0 * L_)));
    if (std::abs(static_cast<double>(g_) * 2.0 * L_ - static_cast<double>(N_)) > 1e-9)
        throw Error(ErrorKind::config, "profile family: N must be an integer multiple of 2L");

    const double mid = 0.5 * (cfg.c_lo + cfg.c_hi);
    const double half = 0.5 * (cfg.c_hi - cfg.c_lo);
    xnodes_.resize(K_);
    cnodes_.resize(K_);
    for (int k = 0; k < K_; ++k) {
        xnodes_[k] = std::cos(M_PI * k / (K_ - 1));
        cnodes_[k] = mid + half * xnodes_[k];
    }

    // Chebyshev-Lobatto differentiation matrix, scaled to the c variable.
    std::vector<double> D(static_cast<std::size_t>(K_) * K_, 0.0);
    auto cbar = [&](int i) { return (i == 0 || i == K_ - 1) ? 2.0 : 1.0; };
    for (int i = 0; i < K_; ++i) {
        double rowsum = 0;
        for (int j = 0; j < K_; ++j) {
            if (i == j) continue;
            const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            const double v = (cbar(i) / cbar(j)) * sgn / (xnodes_[i] - xnodes_[j]);
            D[i * K_ + j] = v;
            rowsum += v;
        }
        D[i * K_ + i] = -rowsum;
    }
    for (auto& v : D) v /= half;

    node_tbl_.assign(kFnCount, std::vector<double>(static_cast<std::size_t>(K_) * N_, 0.0));
    node_antider_r2_.assign(static_cast<std::size_t>(K_) * N_, 0.0);
    node_mean_r2_.resize(K_);
    node_H_.resize(K_);
    node_Ir_.resize(K_);

    Fft fft(N_);
    auto put = [&](Fn fn, int k, const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), node_tbl_[static_cast<int>(fn)].begin() + static_cast<std::size_t>(k) * N_);
    };

    for (int k = 0; k < K_; ++k) {
        const ProfileSolution sol = solve_profile(cnodes_[k], N_, L_);
        put(Fn::r, k, phys_table(fft, sol.rhat));
        put(Fn::p, k, phys_table(fft, sol.phat));
        put(Fn::dx_r, k, phys_table(fft, mul_ik(sol, sol.rhat, 1)));
        put(Fn::dx_p, k, phys_table(fft, mul_ik(sol, sol.phat, 1)));
        put(Fn::dxx_r, k, phys_table(fft, mul_ik(sol, sol.rhat, 2)));
        put(Fn::dxx_p, k, phys_table(fft, mul_ik(sol, sol.phat, 2)));

        // r^2 and its spectrum
        const auto& rtab = node_tbl_[static_cast<int>(Fn::r)];
        std::vector<cplx> r2phys(N_);
        for (std::size_t i = 0; i < N_; ++i) {
            const double rv = rtab[static_cast<std::size_t>(k) * N_ + i];
            r2phys[i] = rv * rv;
        }
        std::vector<cplx> r2hat;
        fft.forward(r2phys, r2hat);
        std::vector<double> r2tab(N_);
        for (std::size_t i = 0; i < N_; ++i) r2tab[i] = r2phys[i].real();
        put(Fn::r2, k, r2tab);
        put(Fn::dx_r2, k, phys_table(fft, mul_ik(sol, r2hat, 1)));
        put(Fn::dxx_r2, k, phys_table(fft, mul_ik(sol, r2hat, 2)));

        // periodic antiderivative part of r^2
        std::vector<cplx> aspec(N_, cplx(0, 0));
        for (std::size_t m = 1; m < N_; ++m) {
            if (m == N_ / 2) continue;
            aspec[m] = r2hat[m] / cplx(0.0, sol.k(m));
        }
        std::vector<cplx> aphys;
        fft.inverse(aspec, aphys);
        for (std::size_t i = 0; i < N_; ++i)
            node_antider_r2_[static_cast<std::size_t>(k) * N_ + i] = aphys[i].real();
        node_mean_r2_[k] = r2hat[0].real() / static_cast<double>(N_);

        node_H_[k] = sol.hamiltonian_x();
        node_Ir_[k] = sol.integral_r();
    }

    // c-derivatives of the tables by spectral differentiation in c.
    auto apply_D = [&](const std::vector<double>& src, std::vector<double>& dst) {
        dst.assign(static_cast<std::size_t>(K_) * N_, 0.0);
        for (int i = 0; i < K_; ++i)
            for (int j = 0; j < K_; ++j) {
                const double d = D[i * K_ + j];
                if (d == 0.0) continue;
                const double* s = src.data() + static_cast<std::size_t>(j) * N_;
                double* o = dst.data() + static_cast<std::size_t>(i) * N_;
                for (std::size_t q = 0; q < N_; ++q) o[q] += d * s[q];
            }
    };
    auto tbl = [&](Fn fn) -> std::vector<double>& { return node_tbl_[static_cast<int>(fn)]; };
    apply_D(tbl(Fn::r), tbl(Fn::dc_r));
    apply_D(tbl(Fn::p), tbl(Fn::dc_p));
    apply_D(tbl(Fn::dx_r), tbl(Fn::dxc_r));
    apply_D(tbl(Fn::dx_p), tbl(Fn::dxc_p));
    apply_D(tbl(Fn::dc_r), tbl(Fn::dcc_r));
    apply_D(tbl(Fn::dc_p), tbl(Fn::dcc_p));

    // c-derivatives of r^2 by the product rule from the r-tables, so the
    // identities dc r^2 = 2 r dc r etc. hold pointwise across modules; their
    // x-derivatives and antiderivatives come from the product tables' own
    // spectra, keeping d/dx consistent.
    {
        auto& r_t = tbl(Fn::r);
        auto& dcr_t = tbl(Fn::dc_r);
        auto& dccr_t = tbl(Fn::dcc_r);
        auto& dc_r2_t = tbl(Fn::dc_r2);
        auto& dcc_r2_t = tbl(Fn::dcc_r2);
        for (std::size_t q = 0; q < dc_r2_t.size(); ++q) {
            dc_r2_t[q] = 2.0 * r_t[q] * dcr_t[q];
            dcc_r2_t[q] = 2.0 * (dcr_t[q] * dcr_t[q] + r_t[q] * dccr_t[q]);
        }
        node_antider_dc_r2_.assign(static_cast<std::size_t>(K_) * N_, 0.0);
        node_mean_dc_r2_.assign(K_, 0.0);
        auto& dxc_r2_t = tbl(Fn::dxc_r2);
        const ProfileSolution meta = [&] {
            ProfileSolution s;
            s.L = L_;
            s.N = N_;
            return s;
        }();
        for (int k = 0; k < K_; ++k) {
            std::vector<cplx> phys(N_), spec;
            for (std::size_t i = 0; i < N_; ++i)
                phys[i] = dc_r2_t[static_cast<std::size_t>(k) * N_ + i];
            fft.forward(phys, spec);
            // x-derivative
            auto dspec = mul_ik(meta, spec, 1);
            auto dphys = phys_table(fft, dspec);
            std::copy(dphys.begin(), dphys.end(),
                      dxc_r2_t.begin() + static_cast<std::size_t>(k) * N_);
            // periodic antiderivative part and mean
            std::vector<cplx> aspec(N_, cplx(0, 0));
            for (std::size_t m = 1; m < N_; ++m) {
                if (m == N_ / 2) continue;
                aspec[m] = spec[m] / cplx(0.0, meta.k(m));
            }
            std::vector<cplx> aphys;
            fft.inverse(aspec, aphys);
            for (std::size_t i = 0; i < N_; ++i)
                node_antider_dc_r2_[static_cast<std::size_t>(k) * N_ + i] = aphys[i].real();
            node_mean_dc_r2_[k] = spec[0].real() / static_cast<double>(N_);
        }
    }

    auto apply_D_vec = [&](const std::vector<double>& src) {
        std::vector<double> out(K_, 0.0);
        for (int i = 0; i < K_; ++i)
            for (int j = 0; j < K_; ++j) out[i] += D[i * K_ + j] * src[j];
        return out;
    };
    const auto dH = apply_D_vec(node_H_);
    const auto dIr = apply_D_vec(node_Ir_);
    node_alpha0_.resize(K_);
    node_alpha1_.resize(K_);
    for (int k = 0; k < K_; ++k) {
        node_alpha0_[k] = dH[k] / cnodes_[k];
        node_alpha1_[k] = -dIr[k] * (node_Ir_[k] + cnodes_[k] * dIr[k]);
        if (!(node_alpha0_[k] > 0))
            throw Error(ErrorKind::solver_failure, "profile family: alpha0 <= 0 at a node");
    }
    node_dalpha0_ = apply_D_vec(node_alpha0_);
    node_dalpha1_ = apply_D_vec(node_alpha1_);
}

void ProfileFamily::check_range(double c) const {
    if (!(c >= cfg_.c_lo && c <= cfg_.c_hi))
        throw Error(ErrorKind::domain, "profile family: c outside the built range");
}

void ProfileFamily::cheb_weights(double c, double* w) const {
    check_range(c);
    const double mid = 0.5 * (cfg_.c_lo + cfg_.c_hi);
    const double half = 0.5 * (cfg_.c_hi - cfg_.c_lo);
    const double t = (c - mid) / half;
    double den = 0;
    for (int k = 0; k < K_; ++k) {
        const double diff = t - xnodes_[k];
        if (std::abs(diff) < 1e-14) {
            for (int j = 0; j < K_; ++j) w[j] = 0.0;
            w[k] = 1.0;
            return;
        }
        double bw = ((k % 2) ? -1.0 : 1.0);
        if (k == 0 || k == K_ - 1) bw *= 0.5;
        w[k] = bw / diff;
        den += w[k];
    }
    for (int k = 0; k < K_; ++k) w[k] /= den;
}

double ProfileFamily::interp_nodes(const std::vector<double>& nodevals, double c) const {
    std::vector<double> w(K_);
    cheb_weights(c, w.data());
    double s = 0;
    for (int k = 0; k < K_; ++k) s += w[k] * nodevals[k];
    return s;
}

double ProfileFamily::alpha0(double c) const { return interp_nodes(node_alpha0_, c); }
double ProfileFamily::alpha1(double c) const { return interp_nodes(node_alpha1_, c); }
double ProfileFamily::d_alpha0(double c) const { return interp_nodes(node_dalpha0_, c); }
double ProfileFamily::d_alpha1(double c) const { return interp_nodes(node_dalpha1_, c); }
double ProfileFamily::hamiltonian_curve(double c) const { return interp_nodes(node_H_, c); }
double ProfileFamily::integral_r(double c) const { return interp_nodes(node_Ir_, c); }

Mat2 ProfileFamily::matrix_A(double c) const {
    const double a0 = alpha0(c), a1 = alpha1(c);
    return {0.0, a0, -a0, a1};
}

Mat2 ProfileFamily::matrix_A_inv(double c) const {
    const double a0 = alpha0(c), a1 = alpha1(c);
    const double s = 1.0 / (a0 * a0);
    return {s * a1, -s * a0, s * a0, 0.0};
}

Mat2 ProfileFamily::d_matrix_A_inv(double c) const {
    const double a0 = alpha0(c), a1 = alpha1(c);
    const double da0 = d_alpha0(c), da1 = d_alpha1(c);
    // d/dc of (1/a0^2) [a1, -a0; a0, 0]
    const double s = 1.0 / (a0 * a0);
    const double ds = -2.0 * da0 / (a0 * a0 * a0);
    return {ds * a1 + s * da1, -(ds * a0 + s * da0), ds * a0 + s * da0, 0.0};
}

double ProfileFamily::eval(Fn f, double x, double c) const {
    // the profile functions live on one torus period and have decayed to the
    // representation floor at its edges; outside they are zero, not periodic
    if (std::abs(x) > L_ - 0.51) return 0.0;
    std::vector<double> w(K_);
    cheb_weights(c, w.data());
    const double h = grid_h();
    double u = (x + L_) / h;
    u -= std::floor(u / static_cast<double>(N_)) * static_cast<double>(N_);
    const long i0 = static_cast<long>(std::floor(u));
    const double s = u - static_cast<double>(i0);
    double lw[8];
    lagrange8(s, lw);
    const auto& tbl = node_tbl_[static_cast<int>(f)];
    double acc = 0;
    for (int d = 0; d < 8; ++d) {
        const std::size_t idx = static_cast<std::size_t>(
            ((i0 + d - 3) % static_cast<long>(N_) + static_cast<long>(N_)) % static_cast<long>(N_));
        double col = 0;
        for (int k = 0; k < K_; ++k) col += w[k] * tbl[static_cast<std::size_t>(k) * N_ + idx];
        acc += lw[d] * col;
    }
    return acc;
}

void ProfileFamily::sample(Fn f, double xi, double c, long j0, std::size_t len, double* out) const {
    std::vector<double> w(K_);
    cheb_weights(c, w.data());
    const double h = grid_h();
    const auto& tbl = node_tbl_[static_cast<int>(f)];
    const long NN = static_cast<long>(N_);
    double u = (static_cast<double>(j0) - xi + L_) / h;
    u -= std::floor(u / static_cast<double>(N_)) * static_cast<double>(N_);
    long i0 = static_cast<long>(std::floor(u));
    const double s = u - static_cast<double>(i0);
    double lw[8];
    lagrange8(s, lw);
    double x = static_cast<double>(j0) - xi;
    for (std::size_t j = 0; j < len; ++j, x += 1.0) {
        if (std::abs(x) > L_ - 0.51) {
            out[j] = 0.0;
            i0 += g_;
            continue;
        }
        double acc = 0;
        for (int d = 0; d < 8; ++d) {
            const std::size_t idx =
                static_cast<std::size_t>(((i0 + d - 3) % NN + NN) % NN);
            double col = 0;
            for (int k = 0; k < K_; ++k) col += w[k] * tbl[static_cast<std::size_t>(k) * N_ + idx];
            acc += lw[d] * col;
        }
        out[j] = acc;
        i0 += g_;
    }
}

namespace {
double antider_eval(double x, double L, std::size_t N, double h, const double* periodic,
                    double mean, double A0) {
    // constant outside the torus: 0 far left, the total integral far right
    if (x <= -L + 0.51) return 0.0;
    if (x >= L - 0.51) return mean * 2.0 * L;
    double u = (x + L) / h;
    u -= std::floor(u / static_cast<double>(N)) * static_cast<double>(N);
    const long i0 = static_cast<long>(std::floor(u));
    const double s = u - static_cast<double>(i0);
    double lw[8];
    lagrange8(s, lw);
    const long NN = static_cast<long>(N);
    double acc = 0;
    for (int d = 0; d < 8; ++d) {
        const std::size_t idx = static_cast<std::size_t>(((i0 + d - 3) % NN + NN) % NN);
        acc += lw[d] * periodic[idx];
    }
    return mean * (x + L) + acc - A0;
}
}  // namespace

double ProfileFamily::antider_r2(double x, double c) const {
    std::vector<double> w(K_);
    cheb_weights(c, w.data());
    double acc = 0;
    for (int k = 0; k < K_; ++k) {
        const double* per = node_antider_r2_.data() + static_cast<std::size_t>(k) * N_;
        acc += w[k] * antider_eval(x, L_, N_, grid_h(), per, node_mean_r2_[k], per[0]);
    }
    return acc;
}

double ProfileFamily::antider_dc_r2(double x, double c) const {
    std::vector<double> w(K_);
    cheb_weights(c, w.data());
    double acc = 0;
    for (int k = 0; k < K_; ++k) {
        const double* per = node_antider_dc_r2_.data() + static_cast<std::size_t>(k) * N_;
        acc += w[k] * antider_eval(x, L_, N_, grid_h(), per, node_mean_dc_r2_[k], per[0]);
    }
    return acc;
}

double ProfileFamily::total_r2(double c) const {
    return interp_nodes(node_mean_r2_, c) * 2.0 * L_;
}

double ProfileFamily::total_dc_r2(double c) const {
    return interp_nodes(node_mean_dc_r2_, c) * 2.0 * L_;
}

std::shared_ptr<const ProfileFamily::Tables> ProfileFamily::tables_at(double c) const {
    {
        std::lock_guard<std::mutex> lk(cache_mtx_);
        auto it = tables_cache_.find(c);
        if (it != tables_cache_.end()) return it->second;
    }
    auto t = std::make_shared<Tables>();
    t->c = c;
    t->L = L_;
    t->N = N_;
    t->g = g_;
    t->h = grid_h();
    t->alpha0 = alpha0(c);
    t->alpha1 = alpha1(c);
    t->A = matrix_A(c);
    t->A_inv = matrix_A_inv(c);
    t->dA_inv = d_matrix_A_inv(c);
    std::vector<double> w(K_);
    cheb_weights(c, w.data());
    for (int f = 0; f < kFnCount; ++f) {
        t->f[f].assign(N_, 0.0);
        const auto& tbl = node_tbl_[f];
        for (int k = 0; k < K_; ++k) {
            const double wk = w[k];
            if (wk == 0.0) continue;
            const double* s = tbl.data() + static_cast<std::size_t>(k) * N_;
            double* o = t->f[f].data();
            for (std::size_t i = 0; i < N_; ++i) o[i] += wk * s[i];
        }
    }
    t->antider_r2_tbl.assign(N_, 0.0);
    t->antider_dc_r2_tbl.assign(N_, 0.0);
    t->mean_r2 = 0;
    t->mean_dc_r2 = 0;
    for (int k = 0; k < K_; ++k) {
        const double wk = w[k];
        if (wk == 0.0) continue;
        const double* pr = node_antider_r2_.data() + static_cast<std::size_t>(k) * N_;
        const double* pc = node_antider_dc_r2_.data() + static_cast<std::size_t>(k) * N_;
        for (std::size_t i = 0; i < N_; ++i) {
            t->antider_r2_tbl[i] += wk * pr[i];
            t->antider_dc_r2_tbl[i] += wk * pc[i];
        }
        t->mean_r2 += wk * node_mean_r2_[k];
        t->mean_dc_r2 += wk * node_mean_dc_r2_[k];
    }
    t->A0_r2 = t->antider_r2_tbl[0];
    t->A0_dc_r2 = t->antider_dc_r2_tbl[0];

    std::lock_guard<std::mutex> lk(cache_mtx_);
    auto [it, ok] = tables_cache_.emplace(c, std::move(t));
    return it->second;
}

double ProfileFamily::Tables::eval(Fn fn, double x) const {
    if (std::abs(x) > L - 0.51) return 0.0;
    double u = (x + L) / h;
    u -= std::floor(u / static_cast<double>(N)) * static_cast<double>(N);
    const long i0 = static_cast<long>(std::floor(u));
    const double s = u - static_cast<double>(i0);
    double lw[8];
    lagrange8(s, lw);
    const auto& tbl = f[static_cast<int>(fn)];
    const long NN = static_cast<long>(N);
    double acc = 0;
    for (int d = 0; d < 8; ++d)
        acc += lw[d] * tbl[static_cast<std::size_t>(((i0 + d - 3) % NN + NN) % NN)];
    return acc;
}

void ProfileFamily::Tables::sample(Fn fn, double xi, long j0, std::size_t len, double* out) const {
    const auto& tbl = f[static_cast<int>(fn)];
    const long NN = static_cast<long>(N);
    double u = (static_cast<double>(j0) - xi + L) / h;
    u -= std::floor(u / static_cast<double>(N)) * static_cast<double>(N);
    long i0 = static_cast<long>(std::floor(u));
    const double s = u - static_cast<double>(i0);
    double lw[8];
    lagrange8(s, lw);
    double x = static_cast<double>(j0) - xi;
    for (std::size_t j = 0; j < len; ++j, x += 1.0) {
        if (std::abs(x) > L - 0.51) {
            out[j] = 0.0;
            i0 += g;
            if (i0 >= NN) i0 -= NN;
            continue;
        }
        double acc = 0;
        if (i0 >= 3 && i0 + 4 < NN) {
            const double* base = tbl.data() + (i0 - 3);
            for (int d = 0; d < 8; ++d) acc += lw[d] * base[d];
        } else {
            for (int d = 0; d < 8; ++d)
                acc += lw[d] * tbl[static_cast<std::size_t>(((i0 + d - 3) % NN + NN) % NN)];
        }
        out[j] = acc;
        i0 += g;
        if (i0 >= NN) i0 -= NN;
    }
}

double ProfileFamily::Tables::antider_r2(double x) const {
    return antider_eval(x, L, N, h, antider_r2_tbl.data(), mean_r2, A0_r2);
}

double ProfileFamily::Tables::antider_dc_r2(double x) const {
    return antider_eval(x, L, N, h, antider_dc_r2_tbl.data(), mean_dc_r2, A0_dc_r2);
}

}  // namespace fput
