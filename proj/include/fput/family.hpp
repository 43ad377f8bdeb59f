#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>

#include "fput/profile.hpp"

namespace fput {

/// Profile-derived functions tabulated on the solver grid.
enum class Fn : int {
    r = 0, p,
    dx_r, dx_p,        // d/dx
    dxx_r, dxx_p,      // d2/dx2
    dc_r, dc_p,        // d/dc along the even-normalized family
    dxc_r, dxc_p,
    dcc_r, dcc_p,
    r2,                // r^2
    dx_r2, dxx_r2,
    dc_r2, dxc_r2, dcc_r2,
    count_
};
constexpr int kFnCount = static_cast<int>(Fn::count_);

/// Smooth-in-c access to the traveling-wave family over [c_lo, c_hi]:
/// profiles solved at Chebyshev-Lobatto nodes on a shared grid, c-derivatives
/// by spectral differentiation in c, x-evaluation by 8-point Lagrange
/// interpolation on the fine grid (agrees with the exact trigonometric
/// evaluation to ~1e-13).
class ProfileFamily {
  public:
    struct Config {
        double c_lo = 0, c_hi = 0;
        int nodes = 17;
        std::size_t N = 0;  // 0 = derive from c_lo
        double L = 0;
    };

    explicit ProfileFamily(const Config& cfg);

    double c_lo() const { return cfg_.c_lo; }
    double c_hi() const { return cfg_.c_hi; }
    double L() const { return L_; }
    std::size_t N() const { return N_; }
    double grid_h() const { return 2.0 * L_ / static_cast<double>(N_); }
    long cells_per_site() const { return g_; }

    static double epsilon_of(double c) { return std::sqrt(24.0 * (c - 1.0)); }
    /// Weighted-norm exponent a = eps/4, the single weight used across modules.
    static double weight_a(double c) { return 0.25 * epsilon_of(c); }

    /// |x| beyond which every tabulated function is below ~1e-18 relative.
    double support_radius(double c) const;

    // Scalar curves along the family.
    double alpha0(double c) const;
    double alpha1(double c) const;
    double d_alpha0(double c) const;
    double d_alpha1(double c) const;
    double hamiltonian_curve(double c) const;
    double integral_r(double c) const;

    Mat2 matrix_A(double c) const;      // [0, a0; -a0, a1]
    Mat2 matrix_A_inv(double c) const;  // (1/a0^2) [a1, -a0; a0, 0]
    Mat2 d_matrix_A_inv(double c) const;

    /// Point evaluation f(x; c).
    double eval(Fn f, double x, double c) const;

    /// Block sample at lattice sites j0..j0+len-1 of f(j - xi; c); the sites
    /// share one fractional grid offset, so the interpolation weights are
    /// computed once.
    void sample(Fn f, double xi, double c, long j0, std::size_t len, double* out) const;

    /// Antiderivatives from the left edge (= from -infinity up to the
    /// localization floor): P(x) = int_{-L}^x r^2,  Pc(x) = int_{-L}^x dc r^2.
    double antider_r2(double x, double c) const;
    double antider_dc_r2(double x, double c) const;
    double total_r2(double c) const;     // int r^2 dx
    double total_dc_r2(double c) const;  // int dc r^2 dx

    /// All tables collapsed at one c; shared and cached for fixed-speed runs.
    struct Tables {
        double c = 0, L = 0;
        std::size_t N = 0;
        long g = 0;
        double h = 0;
        double alpha0 = 0, alpha1 = 0;
        Mat2 A, A_inv, dA_inv;
        double mean_r2 = 0, mean_dc_r2 = 0;  // zero-mode densities of the antiderivatives
        double A0_r2 = 0, A0_dc_r2 = 0;      // periodic antiderivative parts at x = -L
        std::array<std::vector<double>, kFnCount> f;
        std::vector<double> antider_r2_tbl, antider_dc_r2_tbl;  // periodic parts

        double eval(Fn fn, double x) const;
        void sample(Fn fn, double xi, long j0, std::size_t len, double* out) const;
        double antider_r2(double x) const;
        double antider_dc_r2(double x) const;
        double total_r2() const { return mean_r2 * 2.0 * L; }
        double total_dc_r2() const { return mean_dc_r2 * 2.0 * L; }
        double support_radius() const;
        double epsilon() const { return ProfileFamily::epsilon_of(c); }
    };
    std::shared_ptr<const Tables> tables_at(double c) const;

  private:
    void check_range(double c) const;
    // Barycentric weights omega_k(c) for the node values.
    void cheb_weights(double c, double* w) const;
    double interp_nodes(const std::vector<double>& nodevals, double c) const;

    Config cfg_;
    double L_ = 0;
    std::size_t N_ = 0;
    long g_ = 0;
    int K_ = 0;
    std::vector<double> cnodes_;                      // descending in c
    std::vector<double> xnodes_;                      // on [-1, 1]
    std::vector<std::vector<double>> node_tbl_;       // [fn][node*N + i]
    std::vector<double> node_antider_r2_;             // [node*N + i]
    std::vector<double> node_antider_dc_r2_;
    std::vector<double> node_mean_r2_, node_mean_dc_r2_;
    std::vector<double> node_alpha0_, node_alpha1_, node_dalpha0_, node_dalpha1_;
    std::vector<double> node_H_, node_Ir_;
    mutable std::mutex cache_mtx_;
    mutable std::map<double, std::shared_ptr<const Tables>> tables_cache_;
};

}  // namespace fput
