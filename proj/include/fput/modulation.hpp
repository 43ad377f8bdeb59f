#pragma once

#include <functional>

#include "fput/family.hpp"

namespace fput {

/// Symplectic form Omega(f, g) = <J^{-1} f, g>. Reference implementation via
/// explicit prefix sums; f must decay at the left window edge.
double omega(const LatticeField& f, const LatticeField& g);

/// l2 norm of e^{a (j - xi)} (r, p); exact zeros are skipped so the growing
/// weight ahead of the wave cannot overflow on sites the field never reached.
double weighted_l2(const LatticeField& u, double xi, double a);

/// Profile fields at one (xi, c), sampled on the localization block of the
/// window, together with their J^{-1} prefix data for fast Omega pairings.
class WaveFrame {
  public:
    // field component pair on the block plus prefix-sum (J^{-1}) data
    struct Pairer {
        std::vector<double> wr, wp;  // J^{-1}f on the block: wr = d-^{-1} f_p, wp = d+^{-1} f_r
        double tail_r = 0, tail_p = 0;  // constant values right of the block
    };
    struct TailSums {
        double r = 0, p = 0;  // sums of eta components right of the block
    };

    static WaveFrame build(const ProfileFamily::Tables& t, double xi, const Window& win);
    static WaveFrame build(const ProfileFamily& fam, double xi, double c, const Window& win);

    double xi() const { return xi_; }
    double c() const { return c_; }
    long block_start() const { return jb0_; }
    std::size_t block_len() const { return len_; }
    const Window& window() const { return win_; }

    double alpha0() const { return alpha0_; }
    const Mat2& A() const { return A_; }
    const Mat2& A_inv() const { return Ainv_; }

    // block arrays (lattice site j = jb0 + i)
    const std::vector<double>& phi_r() const { return phi_r_; }
    const std::vector<double>& phi_p() const { return phi_p_; }
    const std::vector<double>& dxi_r() const { return dxi_r_; }
    const std::vector<double>& dxi_p() const { return dxi_p_; }
    const std::vector<double>& dc_r() const { return dc_r_; }
    const std::vector<double>& dc_p() const { return dc_p_; }

    TailSums tail_sums(const LatticeField& eta) const;
    double pair_dxi(const LatticeField& eta, const TailSums& s) const;  // Omega(dxi phi, eta)
    double pair_dc(const LatticeField& eta, const TailSums& s) const;   // Omega(dc phi, eta)

    /// B(xi, c)[eta], the matrix of Omega pairings with second derivatives.
    Mat2 matrix_B(const LatticeField& eta) const;

    /// (-<dxi r, eta_r^2>, -<dc r, eta_r^2>) = Omega(d phi, J N[eta_r, eta_r]).
    Vec2 jn_pairings(const LatticeField& eta) const;

    /// (<dxi r, kappa (r + eta_r)>, <dc r, kappa (r + eta_r)>).
    Vec2 kappa_pairings(const SpringCoefficients& coeffs, const LatticeField* eta) const;

    /// y += s * (dxi phi) and y += s * (dc phi) on the block.
    void add_dxi(LatticeField& y, double s) const;
    void add_dc(LatticeField& y, double s) const;

  private:
    double omega_pair(const Pairer& pr, const LatticeField& eta, const TailSums& s) const;

    double xi_ = 0, c_ = 0;
    long jb0_ = 0;
    std::size_t len_ = 0;
    Window win_;
    double alpha0_ = 0, alpha1_ = 0;
    Mat2 A_, Ainv_;
    std::vector<double> phi_r_, phi_p_;
    std::vector<double> dxi_r_, dxi_p_, dc_r_, dc_p_;
    std::vector<double> dxixi_r_, dxixi_p_, dxic_r_, dxic_p_, dcc_r_, dcc_p_;
    Pairer pr_dxi_, pr_dc_, pr_dxixi_, pr_dxic_, pr_dcc_;
};

/// (Gamma, C) of the modulation system at (xi, c, eta):
/// (A - B[eta])^{-1} (Omega(d phi, JN) - sigma <d r, kappa (r + eta_r)>).
Vec2 gamma_c_maps(const WaveFrame& frame, const SpringCoefficients& coeffs,
                  const LatticeField& eta);

/// T_{sigma kappa} = JN[eta_r,eta_r] - Gamma dxi phi - C dc phi
///                   + sigma (0, d-(kappa (r + eta_r))).
LatticeField T_map(const WaveFrame& frame, const SpringCoefficients& coeffs,
                   const LatticeField& eta, const Vec2& gamma_c);

struct FitOptions {
    int max_iter = 50;
    double step_tol = 1e-12;
    double ortho_tol = 1e-8;
    double coherence_ratio = 0.2;  // ||eta||_a vs ||phi||_a
    bool check_coherence = true;
};

struct FitResult {
    double xi = 0, c = 0;
    double gamma = 0;  // filled by trajectory drivers (xi - int c dt)
    LatticeField eta;
    int iterations = 0;
    double resid_dxi = 0, resid_dc = 0;
    double eta_l2 = 0, eta_weighted = 0;
};

/// Damped Newton on the two orthogonality conditions
/// Omega(dxi phi, u - phi) = Omega(dc phi, u - phi) = 0.
FitResult fit_modulation(const LatticeField& u, double xi_guess, double c_guess,
                         const ProfileFamily& fam, const FitOptions& opt = {});

struct ModulationState {
    double gamma = 0, c = 0, xi = 0;
    LatticeField eta;
};

struct ModObserverPoint {
    double t, gamma, c, xi, eta_l2, eta_weighted, ortho_dxi, ortho_dc;
    double ab_margin;  // |det(A - B[eta])| / alpha0^2, monitored invertibility
};

/// RK4 on the coupled (gamma, c, xi, eta) system.
ModulationState integrate_modulation(
    const ModulationState& init, const SpringCoefficients& coeffs, const ProfileFamily& fam,
    double dt, double t_end,
    const std::function<void(const ModObserverPoint&)>& observer = nullptr,
    std::size_t observer_stride = 10);

}  // namespace fput
