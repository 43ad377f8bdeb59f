#include "fput/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

namespace fput {

namespace {

// k = 2*pi*n modes: sin(k/2) = 0 exactly there, handled explicitly.
bool is_integer_harmonic(std::size_t m, std::size_t N, double L) {
    const long twoL = static_cast<long>(2.0 * L);
    long mt = static_cast<long>(m);
    if (mt > static_cast<long>(N / 2)) mt -= static_cast<long>(N);
    return mt != 0 && std::labs(mt) % twoL == 0;
}

void symmetrize_even(std::vector<cplx>& F) {
    const std::size_t N = F.size();
    std::vector<double> v(N);
    for (std::size_t m = 0; m < N; ++m) v[m] = ((m & 1) ? -1.0 : 1.0) * F[m].real();
    for (std::size_t m = 0; m < N; ++m) {
        const double g = 0.5 * (v[m] + v[(N - m) % N]);
        F[m] = cplx(((m & 1) ? -1.0 : 1.0) * g, 0.0);
    }
}

}  // namespace

double ProfileSolution::k(std::size_t m) const {
    long mt = static_cast<long>(m);
    if (mt > static_cast<long>(N / 2)) mt -= static_cast<long>(N);
    return M_PI * static_cast<double>(mt) / L;
}

void ProfileSolution::eval(double x, double& r, double& p) const {
    if (std::abs(x) > L) throw Error(ErrorKind::domain, "profile eval: |x| > L");
    const double phi = M_PI * (x + L) / L;
    cplx sr = 0, sp = 0;
    const cplx step = std::polar(1.0, phi);
    cplx ph = std::polar(1.0, -static_cast<double>(N / 2) * phi);
    for (std::size_t i = 0; i < N; ++i) {
        const long mt = static_cast<long>(i) - static_cast<long>(N / 2);
        const std::size_t m = static_cast<std::size_t>((mt + static_cast<long>(N)) % static_cast<long>(N));
        if (i % 64 == 0) ph = std::polar(1.0, static_cast<double>(mt) * phi);
        sr += rhat[m] * ph;
        sp += phat[m] * ph;
        ph *= step;
    }
    const double inv = 1.0 / static_cast<double>(N);
    r = sr.real() * inv;
    p = sp.real() * inv;
}

double ProfileSolution::eval_r(double x) const {
    double r, p;
    eval(x, r, p);
    return r;
}

LatticeField ProfileSolution::sample_lattice(double xi, const Window& w) const {
    LatticeField out(w.j_min, w.width);
    const double cut = std::min(L - 1.0, 46.0 / epsilon + 8.0);
    for (std::size_t i = 0; i < w.width; ++i) {
        const double x = static_cast<double>(w.j_min + static_cast<long>(i)) - xi;
        if (std::abs(x) <= cut) eval(x, out.r[i], out.p[i]);
    }
    return out;
}

double ProfileSolution::integral_r() const {
    // h * sum_j r_j, and the DFT zero mode is exactly that sum.
    return h() * rhat[0].real();
}

double ProfileSolution::hamiltonian_x() const {
    const auto r = grid_values(rhat);
    const auto p = grid_values(phat);
    double s = 0;
    for (std::size_t i = 0; i < N; ++i)
        s += 0.5 * p[i] * p[i] + 0.5 * r[i] * r[i] + r[i] * r[i] * r[i] / 3.0;
    return s * h();
}

std::vector<double> ProfileSolution::grid_x() const {
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = -L + static_cast<double>(i) * h();
    return x;
}

std::vector<double> ProfileSolution::grid_values(const std::vector<cplx>& spec) const {
    Fft fft(N);
    std::vector<cplx> phys;
    fft.inverse(spec, phys);
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = phys[i].real();
    return out;
}

void default_grid(double c, std::size_t& N, double& L) {
    if (!(c > 1.0) || c > 1.1)
        throw Error(ErrorKind::domain, "profile: wave speed must be in (1, 1.1]");
    const double eps = std::sqrt(24.0 * (c - 1.0));
    // Half-period large enough that the e^{-eps x} tail of the sech^2-scale
    // profile is below 1e-13 at L/2; L a power of two so the unit lattice
    // spacing is an integer number of grid cells.
    const double amp4 = 0.5 * eps * eps;
    const double Ldecay = (2.0 / eps) * std::log(amp4 * 1e13);
    const double Lmin = std::max({40.0 / eps, 80.0, Ldecay});
    double l = 128.0;
    while (l < Lmin) l *= 2.0;
    L = l;
    N = static_cast<std::size_t>(16.0 * l);
}

ProfileSolution solve_profile(double c, const SolveOptions& opt) {
    std::size_t N;
    double L;
    default_grid(c, N, L);
    return solve_profile(c, N, L, opt);
}

ProfileSolution solve_profile(double c, std::size_t N, double L, const SolveOptions& opt) {
    if (!(c > 1.0) || c > 1.1)
        throw Error(ErrorKind::domain, "profile: wave speed must be in (1, 1.1]");
    const double eps = std::sqrt(24.0 * (c - 1.0));
    if (N < 1024 || L < 40.0 / eps)
        throw Error(ErrorKind::domain, "profile: grid too small (need N >= 1024, L >= 40/eps)");

    ProfileSolution sol;
    sol.c = c;
    sol.epsilon = eps;
    sol.L = L;
    sol.N = N;

    const double h = 2.0 * L / static_cast<double>(N);
    Fft fft(N);

    // Fixed-point multiplier and zero-mode limit.
    std::vector<double> mult(N), lsym(N), ksq(N);
    for (std::size_t m = 0; m < N; ++m) {
        const double k = [&] {
            long mt = static_cast<long>(m);
            if (mt > static_cast<long>(N / 2)) mt -= static_cast<long>(N);
            return M_PI * static_cast<double>(mt) / L;
        }();
        ksq[m] = k * k;
        if (m == 0) {
            mult[m] = 1.0 / (c * c - 1.0);
            lsym[m] = 0.0;
        } else if (is_integer_harmonic(m, N, L)) {
            mult[m] = 0.0;
            lsym[m] = 0.0;
        } else {
            const double s2 = 4.0 * sq(std::sin(0.5 * k));
            mult[m] = s2 / (c * c * k * k - s2);
            lsym[m] = s2;
        }
    }

    // KdV seed.
    std::vector<cplx> phys(N), spec(N), r2hat(N), w(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double x = -L + static_cast<double>(i) * h;
        const double s = 1.0 / std::cosh(0.5 * eps * x);
        phys[i] = eps * eps / 8.0 * s * s;
    }
    fft.forward(phys, spec);
    symmetrize_even(spec);

    std::vector<cplx> rphys(N);
    fft.inverse(spec, rphys);

    bool converged = false;
    double delta = 0, S = 0;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        for (std::size_t i = 0; i < N; ++i) {
            const double r = rphys[i].real();
            phys[i] = r * r;
        }
        fft.forward(phys, r2hat);
        double num = 0, den = 0;
        for (std::size_t m = 0; m < N; ++m) {
            w[m] = mult[m] * r2hat[m];
            num += std::norm(spec[m]);
            den += (std::conj(spec[m]) * w[m]).real();
        }
        if (den == 0.0)
            throw Error(ErrorKind::solver_failure, "petviashvili: degenerate quotient");
        S = num / den;
        for (std::size_t m = 0; m < N; ++m) spec[m] = S * S * w[m];
        symmetrize_even(spec);
        std::vector<cplx> rnew(N);
        fft.inverse(spec, rnew);
        delta = 0;
        for (std::size_t i = 0; i < N; ++i)
            delta = std::max(delta, std::abs(rnew[i].real() - rphys[i].real()));
        rphys.swap(rnew);
        if (delta <= opt.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "petviashvili: no convergence at c=%.6g after %d iterations "
                      "(last delta %.3e, factor %.12f)",
                      c, opt.max_iter, delta, S);
        throw Error(ErrorKind::solver_failure, buf);
    }
    sol.iterations = it + 1;
    sol.last_delta = delta;

    // Strip the roundoff floor of the spectrum: the fixed-point multiplier
    // amplifies FFT noise by up to 1/(c^2-1), which would otherwise mask the
    // exponential localization of the profile.
    double fmax = 0;
    for (const auto& v : spec) fmax = std::max(fmax, std::abs(v));
    const double floor_thr = 3e-16 * fmax;
    for (auto& v : spec)
        if (std::abs(v) < floor_thr) v = 0.0;
    symmetrize_even(spec);
    sol.rhat = spec;
    fft.inverse(spec, rphys);

    // p recovered from -c r' = d+ p.
    sol.phat.assign(N, cplx(0, 0));
    for (std::size_t m = 0; m < N; ++m) {
        if (m == 0) {
            sol.phat[m] = -c * sol.rhat[m];
        } else if (is_integer_harmonic(m, N, L) || m == N / 2) {
            sol.phat[m] = 0.0;
        } else {
            const double k = sol.k(m);
            const cplx ik(0.0, k);
            sol.phat[m] = -c * ik / (std::exp(cplx(0.0, k)) - 1.0) * sol.rhat[m];
        }
    }

    // Advance-delay residual: c^2 r'' - d+d-(r + r^2), spectrally.
    for (std::size_t i = 0; i < N; ++i) {
        const double r = rphys[i].real();
        phys[i] = r * r;
    }
    fft.forward(phys, r2hat);
    std::vector<cplx> res(N);
    for (std::size_t m = 0; m < N; ++m)
        res[m] = -c * c * ksq[m] * sol.rhat[m] + lsym[m] * (sol.rhat[m] + r2hat[m]);
    fft.inverse(res, phys);
    double rmax = 0;
    for (std::size_t i = 0; i < N; ++i) rmax = std::max(rmax, std::abs(phys[i].real()));
    sol.residual = rmax;
    return sol;
}

namespace {

std::vector<cplx> spec_scale(const ProfileSolution& s, const std::vector<cplx>& f,
                             const std::function<cplx(double, std::size_t)>& g) {
    std::vector<cplx> out(f.size());
    for (std::size_t m = 0; m < f.size(); ++m) out[m] = g(s.k(m), m) * f[m];
    if (f.size() % 2 == 0) out[f.size() / 2] = 0.0;  // drop Nyquist under differentiation
    return out;
}

std::vector<cplx> ddx(const ProfileSolution& s, const std::vector<cplx>& f) {
    return spec_scale(s, f, [](double k, std::size_t) { return cplx(0.0, k); });
}

std::vector<cplx> lincomb(const std::vector<cplx>& a, double wa, const std::vector<cplx>& b,
                          double wb) {
    std::vector<cplx> out(a.size());
    for (std::size_t m = 0; m < a.size(); ++m) out[m] = wa * a[m] + wb * b[m];
    return out;
}

}  // namespace

ProfileDerivatives profile_derivatives(double c, double dc) {
    std::size_t N;
    double L;
    default_grid(c, N, L);
    const ProfileSolution mid = solve_profile(c, N, L);
    const ProfileSolution lo = solve_profile(c - dc, N, L);
    const ProfileSolution hi = solve_profile(c + dc, N, L);

    ProfileDerivatives d;
    d.c = c;
    d.dc = dc;
    d.L = L;
    d.N = N;
    d.dxi_r = ddx(mid, mid.rhat);
    for (auto& v : d.dxi_r) v = -v;
    d.dxi_p = ddx(mid, mid.phat);
    for (auto& v : d.dxi_p) v = -v;
    d.dxixi_r = ddx(mid, ddx(mid, mid.rhat));
    d.dxixi_p = ddx(mid, ddx(mid, mid.phat));
    d.dc_r = lincomb(hi.rhat, 0.5 / dc, lo.rhat, -0.5 / dc);
    d.dc_p = lincomb(hi.phat, 0.5 / dc, lo.phat, -0.5 / dc);
    d.dxic_r = ddx(mid, d.dc_r);
    for (auto& v : d.dxic_r) v = -v;
    d.dxic_p = ddx(mid, d.dc_p);
    for (auto& v : d.dxic_p) v = -v;
    d.dcc_r = lincomb(lincomb(hi.rhat, 1.0, lo.rhat, 1.0), 1.0 / (dc * dc), mid.rhat,
                      -2.0 / (dc * dc));
    d.dcc_p = lincomb(lincomb(hi.phat, 1.0, lo.phat, 1.0), 1.0 / (dc * dc), mid.phat,
                      -2.0 / (dc * dc));
    return d;
}

AlphaCoefficients compute_alphas(double c, double dc) {
    std::size_t N;
    double L;
    default_grid(c, N, L);
    const ProfileSolution s0 = solve_profile(c, N, L);
    const ProfileSolution sm2 = solve_profile(c - 2 * dc, N, L);
    const ProfileSolution sm1 = solve_profile(c - dc, N, L);
    const ProfileSolution sp1 = solve_profile(c + dc, N, L);
    const ProfileSolution sp2 = solve_profile(c + 2 * dc, N, L);

    auto d4 = [dc](double fm2, double fm1, double fp1, double fp2) {
        return (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * dc);
    };
    const double dH = d4(sm2.hamiltonian_x(), sm1.hamiltonian_x(), sp1.hamiltonian_x(),
                         sp2.hamiltonian_x());
    const double Ir = s0.integral_r();
    const double dIr = d4(sm2.integral_r(), sm1.integral_r(), sp1.integral_r(), sp2.integral_r());

    AlphaCoefficients a;
    a.alpha0 = dH / c;
    a.alpha1 = -dIr * (Ir + c * dIr);
    if (!(a.alpha0 > 0))
        throw Error(ErrorKind::solver_failure, "compute_alphas: alpha0 <= 0, profile family defective");
    return a;
}

std::shared_ptr<const ProfileSolution> ProfileCache::get(double c) {
    {
        std::lock_guard<std::mutex> lk(mtx_);
        auto it = cache_.find(c);
        if (it != cache_.end()) return it->second;
    }
    auto sol = std::make_shared<const ProfileSolution>(solve_profile(c, N_, L_));
    std::lock_guard<std::mutex> lk(mtx_);
    auto [it, ok] = cache_.emplace(c, sol);
    return it->second;
}

void write_profile_csv(const std::string& path, const ProfileSolution& prof,
                       const ProfileDerivatives& der) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot open " + path);
    out << "x,r,p,dc_r,dc_p,residual\n";
    const auto x = prof.grid_x();
    const auto r = prof.grid_values(prof.rhat);
    const auto p = prof.grid_values(prof.phat);
    const auto dcr = prof.grid_values(der.dc_r);
    const auto dcp = prof.grid_values(der.dc_p);
    char buf[256];
    for (std::size_t i = 0; i < prof.N; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", x[i], r[i], p[i],
                      dcr[i], dcp[i], prof.residual);
        out << buf;
    }
}

}  // namespace fput
