#pragma once

#include <vector>

#include "fput/lattice.hpp"

namespace fput {

/// First-kind Bessel J_n(x). Negative orders via J_{-n}(x) = (-1)^n J_n(x).
/// Domain: |n| <= 1e5, 0 <= x <= 1e4.
double bessel_j(long n, double x);

/// J_0(x) .. J_nmax(x) in one pass (Miller downward recurrence with
/// normalization; upward recurrence is unstable for n > x).
std::vector<double> bessel_j_array(std::size_t nmax, double x);

/// 2x2 kernel of the free discrete wave group e^{Jt}:
///   Phi(j, t) = [ J_{2j}(2t)   -J_{2j+1}(2t) ]
///              [ -J_{2j-1}(2t)  J_{2j}(2t)   ]
/// Tabulated over the significant range |j| <= cutoff once per t.
class WaveKernel {
  public:
    explicit WaveKernel(double t, double drop_tol = 1e-14);

    Mat2 at(long j) const;
    long cutoff() const { return cutoff_; }
    double t() const { return t_; }

    /// |sum_n J_n(2t)^2 - 1|, the unitarity defect of the tabulated kernel.
    double unitarity_defect() const;

  private:
    double jn(long n) const;  // J_n(2t) with reflection
    double t_;
    long cutoff_;
    std::vector<double> table_;  // J_0(2t) .. J_{2*cutoff+1}(2t)
};

/// u(t) = e^{Jt} u0 by convolution with the Bessel kernel. Finite speed:
/// requires the window to contain the light cone of the support of u0.
LatticeField propagate_free(const LatticeField& u0, double t, double drop_tol = 1e-14);

}  // namespace fput
