#pragma once

#include "nlslab/diagnostics.hpp"
#include "nlslab/dynamics.hpp"

namespace nlslab {

/// Flux-rate identity measured along a trajectory: the time derivative of
/// int a' Im(conj(u) u_r) dx against its four production terms.
struct VirialReport {
  std::string weight_name;
  double t_begin = 0.0, t_end = 0.0;
  std::vector<double> times;
  std::vector<double> flux;      // M_a(t)
  std::vector<double> rate;      // dM_a/dt by 3-point differences
  std::vector<double> hessian, pressure, bilaplacian, potential;
  std::vector<double> pointwise_residual;
  double residual = 0.0;  // sup_t |rate - rhs|
};

/// Requires at least 3 snapshots.
VirialReport virial_identity_check(const Trajectory& traj, const VirialWeight& w);

/// Sup residual of d/dt (1/2 int a |u|^2 dx) = int a' Im(conj(u) u_r) dx.
double virial_primitive_check(const Trajectory& traj, const VirialWeight& w);

/// Cumulative time integral of int |u|^{p+1}/r + |u|^2/r^3 dx (the angular
/// term vanishes for radial fields).  Entry k corresponds to [0, t_k].
std::vector<double> morawetz_series(const Trajectory& traj, const ModelParams& params);

/// Final value of the series over the whole recorded window.
double morawetz_accumulate(const Trajectory& traj, const ModelParams& params);

/// Mass and energy along a trajectory with their worst relative drifts
/// (energy drift is measured against max(1, |E(0)|)).
struct ConservationReport {
  std::vector<double> times, mass_series, energy_series;
  double max_mass_drift = 0.0;
  double max_energy_drift = 0.0;
};

ConservationReport conservation_report(const Trajectory& traj);

/// Three-point finite-difference derivative on a (possibly non-uniform)
/// strictly increasing time base.
std::vector<double> differentiate_series(const std::vector<double>& t,
                                         const std::vector<double>& f);

}  // namespace nlslab
