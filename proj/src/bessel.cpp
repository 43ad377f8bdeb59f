#include "fput/bessel.hpp"

#include <algorithm>
#include <cmath>

namespace fput {

namespace {

constexpr double kRescaleLimit = 1e250;
constexpr double kRescale = 1e-250;

// Three-term Taylor evaluation, adequate for x < 1e-4.
double bessel_small_x(std::size_t n, double x) {
    const double h = 0.5 * x;
    double lead = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        lead *= h / static_cast<double>(k);
        if (lead == 0.0) return 0.0;
    }
    const double h2 = h * h;
    return lead * (1.0 - h2 / (n + 1.0) + 0.5 * h2 * h2 / ((n + 1.0) * (n + 2.0)));
}

std::vector<double> miller_array(std::size_t nmax, double x, std::size_t start_pad) {
    const std::size_t top = std::max<std::size_t>(nmax, static_cast<std::size_t>(std::ceil(x)));
    const std::size_t M = top + start_pad;
    std::vector<double> arr(M + 2, 0.0);
    arr[M + 1] = 0.0;
    arr[M] = 1e-30;
    for (std::size_t n = M; n-- > 0;) {
        arr[n] = (2.0 * (n + 1) / x) * arr[n + 1] - arr[n + 2];
        if (std::abs(arr[n]) > kRescaleLimit) {
            for (std::size_t i = n; i <= M + 1; ++i) arr[i] *= kRescale;
        }
    }
    // Normalize with J_0 + 2*sum J_{2k} = 1.
    double s = arr[0];
    for (std::size_t n = 2; n <= M; n += 2) s += 2.0 * arr[n];
    const double inv = 1.0 / s;
    arr.resize(nmax + 1);
    for (double& v : arr) v *= inv;
    return arr;
}

}  // namespace

std::vector<double> bessel_j_array(std::size_t nmax, double x) {
    if (!(x >= 0.0) || x > 1e4 || nmax > 200000)
        throw Error(ErrorKind::domain, "bessel_j_array: order/argument out of range");
    std::vector<double> arr(nmax + 1, 0.0);
    if (x == 0.0) {
        arr[0] = 1.0;
        return arr;
    }
    if (x < 1e-4) {
        for (std::size_t n = 0; n <= nmax; ++n) arr[n] = bessel_small_x(n, x);
        return arr;
    }
    const double big = std::max<double>(nmax, x);
    std::size_t pad = 24 + static_cast<std::size_t>(2.0 * std::sqrt(big));
    arr = miller_array(nmax, x, pad);
    // One start-point doubling check; bump until stable.
    for (int tries = 0; tries < 4; ++tries) {
        std::vector<double> ref = miller_array(nmax, x, pad + 16);
        double defect = 0.0;
        for (std::size_t n = 0; n <= nmax; ++n)
            defect = std::max(defect, std::abs(arr[n] - ref[n]));
        arr = std::move(ref);
        if (defect <= 1e-15) break;
        pad += 16;
    }
    return arr;
}

double bessel_j(long n, double x) {
    const long an = std::labs(n);
    if (an > 100000) throw Error(ErrorKind::domain, "bessel_j: |n| too large");
    const double sign = (n < 0 && (an % 2 == 1)) ? -1.0 : 1.0;
    const auto arr = bessel_j_array(static_cast<std::size_t>(an), x);
    return sign * arr[static_cast<std::size_t>(an)];
}

WaveKernel::WaveKernel(double t, double drop_tol) : t_(t) {
    if (t < 0.0) throw Error(ErrorKind::domain, "WaveKernel: t must be >= 0");
    const double x = 2.0 * t;
    // J_n(x) is negligible once n exceeds x by a few Airy widths.
    long ncut = static_cast<long>(std::ceil(x + 12.0 * std::cbrt(x + 1.0) + 30.0));
    cutoff_ = ncut / 2 + 1;
    table_ = bessel_j_array(static_cast<std::size_t>(2 * cutoff_ + 1), x);
    while (cutoff_ > 1 && std::abs(table_[2 * cutoff_ - 1]) < drop_tol &&
           std::abs(table_[2 * cutoff_]) < drop_tol)
        --cutoff_;
}

double WaveKernel::jn(long n) const {
    const long an = std::labs(n);
    if (an >= static_cast<long>(table_.size())) return 0.0;
    const double v = table_[static_cast<std::size_t>(an)];
    return (n < 0 && (an % 2 == 1)) ? -v : v;
}

Mat2 WaveKernel::at(long j) const {
    return {jn(2 * j), -jn(2 * j + 1), -jn(2 * j - 1), jn(2 * j)};
}

double WaveKernel::unitarity_defect() const {
    double s = table_[0] * table_[0];
    for (std::size_t n = 1; n < table_.size(); ++n) s += 2.0 * table_[n] * table_[n];
    return std::abs(s - 1.0);
}

LatticeField propagate_free(const LatticeField& u0, double t, double drop_tol) {
    if (t == 0.0) return u0;
    WaveKernel kernel(t, drop_tol);
    const long K = kernel.cutoff();
    const long n = static_cast<long>(u0.size());
    if (u0.boundary_mass(static_cast<std::size_t>(std::min<long>(n / 4, 4))) > 1e-8 &&
        u0.sup_norm() > 0)
        throw Error(ErrorKind::invalid_window, "propagate_free: boundary mass not negligible");
    LatticeField out(u0.j_min, u0.size());
    for (long i = 0; i < n; ++i) {
        double rr = 0.0, pp = 0.0;
        const long d_lo = std::max(-K, i - (n - 1));
        const long d_hi = std::min(K, i);
        for (long d = d_lo; d <= d_hi; ++d) {
            const Mat2 phi = kernel.at(d);
            const double rv = u0.r[static_cast<std::size_t>(i - d)];
            const double pv = u0.p[static_cast<std::size_t>(i - d)];
            rr += phi.a11 * rv + phi.a12 * pv;
            pp += phi.a21 * rv + phi.a22 * pv;
        }
        out.r[static_cast<std::size_t>(i)] = rr;
        out.p[static_cast<std::size_t>(i)] = pp;
    }
    return out;
}

}  // namespace fput
