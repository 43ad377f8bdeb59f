#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "fput/lattice.hpp"
#include "fput/spectral.hpp"

namespace fput {

/// Traveling-wave profile phi_c = (r_c, p_c) on the torus [-L, L), stored
/// spectrally. Grid: x_i = -L + i*h, h = 2L/N, and coefficients follow
/// f(x) = (1/N) sum_m F_m exp(i k_m (x + L)), k_m = pi*mtilde/L.
struct ProfileSolution {
    double c = 0;
    double epsilon = 0;  // sqrt(24 (c - 1))
    double L = 0;
    std::size_t N = 0;
    std::vector<cplx> rhat;
    std::vector<cplx> phat;

    // Solver diagnostics
    int iterations = 0;
    double last_delta = 0;
    double residual = 0;  // sup |c^2 r'' - d+d-(r + r^2)| on the grid

    double h() const { return 2.0 * L / static_cast<double>(N); }
    double k(std::size_t m) const;

    /// Trigonometric evaluation at arbitrary |x| <= L (exact for the stored
    /// representation).
    void eval(double x, double& r, double& p) const;
    double eval_r(double x) const;

    double max_r() const { return eval_r(0.0); }

    /// phi sampled at lattice sites j - xi over a window; zero where the
    /// profile has decayed below the representation floor.
    LatticeField sample_lattice(double xi, const Window& w) const;

    // Spectral quadrature over the torus (= integrals over R up to the
    // boundary floor).
    double integral_r() const;
    double hamiltonian_x() const;  // int p^2/2 + r^2/2 + r^3/3 dx

    std::vector<double> grid_x() const;
    std::vector<double> grid_values(const std::vector<cplx>& spec) const;
};

struct SolveOptions {
    double tol = 1e-13;
    int max_iter = 500;
};

/// Petviashvili iteration on r_hat = m(k) (r^2)_hat with
/// m(k) = 4 sin^2(k/2) / (c^2 k^2 - 4 sin^2(k/2)), m(0) = 1/(c^2-1),
/// seeded with the KdV sech^2 profile; even symmetry imposed each iterate.
ProfileSolution solve_profile(double c, std::size_t N, double L, const SolveOptions& opt = {});

/// Grid rule: L = smallest power of two >= max(40/eps, 80); N = 16 L.
void default_grid(double c, std::size_t& N, double& L);
ProfileSolution solve_profile(double c, const SolveOptions& opt = {});

/// Spectral x- and finite-difference c-derivatives of the profile family at
/// fixed c (centered differences of even-normalized profiles at c +- dc).
struct ProfileDerivatives {
    double c = 0, dc = 0;
    double L = 0;
    std::size_t N = 0;
    // Spectra of the derivative fields, (r, p) components each.
    std::vector<cplx> dxi_r, dxi_p;      // d/dxi phi = -phi'
    std::vector<cplx> dc_r, dc_p;        // d/dc phi
    std::vector<cplx> dxixi_r, dxixi_p;  // d2/dxi2 phi = +phi''
    std::vector<cplx> dxic_r, dxic_p;    // d2/(dxi dc) phi
    std::vector<cplx> dcc_r, dcc_p;      // d2/dc2 phi
};

ProfileDerivatives profile_derivatives(double c, double dc = 1e-4);

struct AlphaCoefficients {
    double alpha0 = 0;  // (1/c) dH/dc, strictly positive on the family
    double alpha1 = 0;  // -(d/dc int r) * (d/dc (c int r))
};

/// Fourth-order centered stencils at {c +- dc, c +- 2dc} on the energy and
/// mass curves of the family.
AlphaCoefficients compute_alphas(double c, double dc = 1e-4);

/// Cache of solved profiles for one (N, L) grid; concurrent reads, exclusive
/// insertion.
class ProfileCache {
  public:
    ProfileCache(std::size_t N, double L) : N_(N), L_(L) {}
    std::shared_ptr<const ProfileSolution> get(double c);
    std::size_t N() const { return N_; }
    double L() const { return L_; }

  private:
    std::size_t N_;
    double L_;
    std::mutex mtx_;
    std::map<double, std::shared_ptr<const ProfileSolution>> cache_;
};

/// CSV export: x, r, p, dc_r, dc_p, residual.
void write_profile_csv(const std::string& path, const ProfileSolution& prof,
                       const ProfileDerivatives& der);

}  // namespace fput
