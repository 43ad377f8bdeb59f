#pragma once

#include "fput/modulation.hpp"

namespace fput {

enum class TailVariant { full, homogeneous };
inline const char* variant_name(TailVariant v) {
    return v == TailVariant::full ? "full" : "homogeneous";
}

/// Bounded real sequence on a window (zero outside), e.g. a kappa realization
/// or a unit spike.
struct RealSeq {
    long j_min = 0;
    std::vector<double> v;

    double at(long j) const {
        const long i = j - j_min;
        return (i >= 0 && i < static_cast<long>(v.size())) ? v[static_cast<std::size_t>(i)] : 0.0;
    }
    long j_max() const { return j_min + static_cast<long>(v.size()) - 1; }

    static RealSeq delta(long m) { return RealSeq{m, {1.0}}; }
    static RealSeq kappa_of(const SpringCoefficients& c) { return RealSeq{c.j_min, c.kappa}; }
};

/// (Gamma^{1,0}, C^{1,0})(xi, c)[f] = -1/2 A^{-1} (<dxi r^2(.-xi), f>, <dc r^2(.-xi), f>).
Vec2 first_order_maps(const ProfileFamily::Tables& t, double xi, const RealSeq& f);

/// (Gamma^{0,2}, C^{0,2})(xi, c)[f, g] = -A^{-1} (<dxi r(.-xi), fg>, <dc r(.-xi), fg>),
/// f and g sampled on the lattice window of h below (here: plain sequences).
Vec2 quadratic_maps(const ProfileFamily::Tables& t, double xi, const RealSeq& f,
                    const RealSeq& g);
/// Same bilinear map applied to lattice-field r-components.
Vec2 quadratic_maps_field(const ProfileFamily::Tables& t, double xi,
                          const std::vector<double>& fr, const std::vector<double>& gr,
                          long field_j_min);

/// (Gamma^{1,1}, C^{1,1})(xi, c)[f, h] =
///   A^{-1} B(xi,c)[h] (Gamma^{1,0}, C^{1,0})[f] + (Gamma^{0,2}, C^{0,2})[f, h_r].
Vec2 mixed_maps(const WaveFrame& frame, const ProfileFamily::Tables& t, const RealSeq& f,
                const LatticeField& h);

/// T^{1,0}(xi,c)[f] = -Gamma^{1,0}[f] dxi phi - C^{1,0}[f] dc phi + (0, d-(f r)).
LatticeField forcing_T10(const WaveFrame& frame, const ProfileFamily::Tables& t,
                         const RealSeq& f);

/// Closed-form first-order modulation for one kappa realization: the windowed
/// sums for c1, the two gamma1 parts, and the antiderivative form of int c1.
class FirstOrderEval {
  public:
    FirstOrderEval(std::shared_ptr<const ProfileFamily::Tables> tables,
                   const SpringCoefficients& coeffs, double c_star);

    double c1(double t) const;
    double gamma1_I(double t) const;
    double gamma1_II(double t) const;
    double int_c1(double t) const;  // int_0^t c1(s) ds, in closed form
    double xi1(double t) const { return gamma1_I(t) + gamma1_II(t) + int_c1(t); }

  private:
    template <class F>
    double window_sum(double t, F&& per_site) const;
    std::shared_ptr<const ProfileFamily::Tables> t_;
    const SpringCoefficients& coeffs_;
    double c_star_;
    double rad_;
};

struct FirstOrderPath {
    std::vector<double> t, c1, gamma1_I, gamma1_II, xi1;
};

FirstOrderPath first_order_path(std::shared_ptr<const ProfileFamily::Tables> tables,
                                const SpringCoefficients& coeffs, double c_star,
                                const std::vector<double>& t_grid);

/// Cov[c1(t), c1(s)] = alpha0^{-2}/(4 c^2) sum_j (r^2(j) - r^2(j-ct)) (r^2(j) - r^2(j-cs)).
double c1_covariance(const ProfileFamily::Tables& t, double c_star, double tt, double ss);

struct SecondOrderPath {
    TailVariant variant = TailVariant::full;
    std::vector<double> t, gamma2, c2;
};

struct ExpansionRun {
    FirstOrderPath first;
    SecondOrderPath second;
    std::vector<double> eta_l2;  // ||eta_bar(t)|| on the grid
};

/// Integrates the linear tail eta_bar (unit forcing T^{1,0}[kappa]) jointly
/// with the second-order corrections (gamma2_bar, c2_bar); defined alongside
/// the tail integrator.
ExpansionRun second_order_path(const ProfileFamily& fam, const SpringCoefficients& coeffs,
                               double c_star, TailVariant variant, double dt, double t_end,
                               std::size_t grid_stride = 1);

}  // namespace fput
