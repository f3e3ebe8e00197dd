#pragma once

#include <utility>

#include "nlslab/diagnostics.hpp"
#include "nlslab/operators.hpp"

namespace nlslab {

/// Stationary profile Q with frequency E: (-Lap + V) Q + |Q|^{p-1} Q = E Q,
/// so that u(t) = exp(-i E t) Q solves the evolution.  Trapped states have
/// E < 0, between the lowest linear eigenvalue and the essential spectrum.
struct BoundState {
  RadialField profile;     // real-valued
  double frequency = 0.0;  // E
  double residual = 0.0;   // H-norm of the equation defect
  double tolerance = 0.0;  // tolerance the solver was asked for
  double amplitude = 0.0;  // Q at the first grid node
  bool positive = false;   // nodeless profile
  bool monotone_tail = false;  // decays monotonically beyond the potential support
};

/// Lowest eigenpair of -Lap + V; the mode is sign-fixed positive and
/// normalized to unit mass.
struct LinearGroundState {
  double eigenvalue = 0.0;
  RadialField mode;
};

LinearGroundState linear_ground_state(const LinearSpectrum& spec);

/// Fixed-point solve of Q = (-Lap + V - E)^{-1} (-|Q|^{p-1} Q), stabilized by
/// the normalization factor gamma^kappa with
/// gamma = <(-Lap+V-E)Q, Q> / <-|Q|^{p-1}Q, Q> and kappa = p/(p-1).
/// Retries once with relaxation when the plain iteration destabilizes.
BoundState petviashvili_solve(const ModelParams& params, const LinearSpectrum& spectrum,
                              double E_target, const RadialField& seed, double tol = 1e-8,
                              int max_iter = 600);

/// Shooting solve of the radial profile equation
///   Q'' + (d-1)/r Q' = (V(r) - E) Q + |Q|^{p-1} Q,  Q(0) = q0, Q'(0) = 0,
/// bisecting q0 between sign-flip and blow-up shots, followed by a short
/// Newton polish onto the discrete operator so the returned state satisfies
/// the same discrete equation as the fixed-point solver.
BoundState shoot_solve(const ModelParams& params, GridPtr grid, double E,
                       std::pair<double, double> amplitude_bracket, double tol = 1e-8);

/// Discrete defect H-norm of a candidate (independent of any solver path).
double bound_state_residual(const ModelParams& params, const RadialField& q, double E);

/// Outcome of a single outward shot of the profile equation.
enum class ShotClass { sign_flip, blow_up, decayed };

ShotClass classify_shot(const ModelParams& params, const RadialGrid& grid, double E, double q0);

/// Polynomial tail-law report: growth of R^{d-4} * mass tail,
/// R^{d-2} * gradient tail, and the pointwise envelope |Q| r^{d-2} over the
/// window outside the potential support.  A bound "holds" when the fitted
/// log-log growth rate stays below a small threshold.
struct TailBoundReport {
  double sup_mass_ratio = 0.0;
  double sup_grad_ratio = 0.0;
  double pointwise_constant = 0.0;
  double mass_slope = 0.0, grad_slope = 0.0, pointwise_slope = 0.0;
  bool mass_bounded = false, grad_bounded = false, pointwise_bounded = false;
  bool degenerate_tail = false;  // window shrunk because the tail underflowed
  double window_lo = 0.0, window_hi = 0.0;
};

TailBoundReport tail_bound_check(const RadialField& q, double support_radius);
TailBoundReport tail_bound_check(const BoundState& q, const ModelParams& params);

/// One record along the frequency branch.
struct BranchPoint {
  double amplitude = 0.0;
  BoundState state;
  double state_mass = 0.0;
  double state_energy = 0.0;
};

/// Branch continuation output; failure_index >= 0 marks early termination
/// (the defocusing branch ends once the well can no longer hold the state).
struct Branch {
  std::vector<BranchPoint> points;
  int failure_index = -1;
  std::string failure_reason;
};

/// Sweep E from E_begin toward E_end in `steps` solves, seeding each solve
/// with the previous profile.  Requires a negative lowest eigenvalue.
Branch continue_branch(const ModelParams& params, const LinearSpectrum& spectrum, double E_begin,
                       double E_end, int steps, double tol = 1e-8);

}  // namespace nlslab
