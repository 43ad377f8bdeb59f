#pragma once

#include "fput/attenuation.hpp"
#include "fput/ensemble.hpp"

namespace fput {

/// c_fit / xi_fit / gamma_fit track of a direct simulation, extracted by the
/// modulation fit at a fixed stride; gamma by trapezoid quadrature of c_fit.
struct FitTrajectory {
    std::vector<double> t, c, xi, gamma;
    std::vector<double> eta_l2, eta_weighted, ortho_dxi, ortho_dc;
};

struct SimulateOptions {
    double dt = 0.05;
    double t_end = 100.0;
    double fit_stride = 0.5;
    std::vector<double> fit_times;  // when set, fit exactly at these times instead
    std::vector<double> snapshot_times;
    std::function<void(double, const LatticeField&)> snapshot_sink;
};

/// Direct lattice integration of the perturbed soliton with modulation-fit
/// extraction along the way. The initial state is the exactly sampled profile.
FitTrajectory simulate_and_fit(const ProfileFamily& fam, const ProfileSolution& exact_profile,
                               const SpringCoefficients& coeffs, double c_star,
                               const SimulateOptions& opt);

/// Profile family spanning the speeds a run will visit.
ProfileFamily make_family(double c_star, double below = 0.012, double above = 0.004,
                          int nodes = 13);

}  // namespace fput
