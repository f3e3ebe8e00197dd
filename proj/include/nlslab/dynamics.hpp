#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlslab/model.hpp"
#include "nlslab/operators.hpp"

namespace nlslab {

/// Absorbing layer over the outer `width` of the grid; used only in long
/// scattering runs, never in conservation or virial measurements.
struct SpongeSpec {
  double width = 0.0;
  double strength = 0.0;
};

struct StepperConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  int record_every = 1;
  std::optional<SpongeSpec> sponge;
  /// When true the potential rides in the linear flow exp(i dt (Lap - V));
  /// otherwise it joins the pointwise phase rotation.  Both agree to O(dt^2).
  bool potential_in_linear = false;
  /// Drop the |u|^{p-1} term (validation runs).
  bool force_linear = false;
};

/// Recorded evolution.  Snapshot 0 is the initial data; times are the step
/// multiples selected by record_every plus the final time.
struct Trajectory {
  ModelParams params;
  StepperConfig config;
  GridPtr grid;
  std::vector<double> times;
  std::vector<VectorXcd> snapshots;
  std::vector<std::string> warnings;

  int size() const { return int(times.size()); }
  RadialField field(int i) const { return {grid, snapshots.at(i)}; }
  /// Index of a recorded time; throws ParameterError when t was not recorded.
  int index_of_time(double t) const;
};

/// One Strang step: half phase rotation, full linear step, half phase
/// rotation.  The route of V is inferred from the spectrum: a spectrum built
/// with the potential propagates exp(i dt (Lap - V)) and the phase rotation
/// carries only |u|^{p-1}; a free spectrum leaves V in the phase rotation.
/// Both substeps preserve the pointwise modulus / discrete v-norm, so mass is
/// conserved to roundoff by construction.
RadialField strang_step(const RadialField& u, double dt, const ModelParams& params,
                        const LinearSpectrum& spectrum);

/// Evolve initial data to t_end, recording snapshots.  t_end must be a whole
/// number of steps.  Attaches wall-contact warnings when more than 1% of the
/// mass sits in the outer 10% of the grid.  Non-finite samples abort with
/// BlowUpError (the defocusing sign should never trigger it).
Trajectory evolve(const RadialField& u0, const ModelParams& params, const StepperConfig& config,
                  const LinearSpectrum& spectrum);

/// H-norm of the defect of the integral form of the flow at a recorded time,
/// u(t) - exp(it Lap) u0 + i * int_0^t exp(i(t-s) Lap) (|u|^{p-1}u + Vu)(s) ds,
/// with the time integral over recorded snapshots by the trapezoid rule.
/// `free_spec` must be a potential-free spectrum on the trajectory grid.
double duhamel_residual(const Trajectory& traj, double t, const LinearSpectrum& free_spec);

/// Multiply by exp(-dt * strength * s(r)) where s ramps smoothly from 0 to 1
/// over the outer sponge width.
RadialField sponge_apply(const RadialField& u, const SpongeSpec& sponge, double dt);

/// Smooth 0->1 ramp with vanishing first and second derivatives at both ends.
double smoothstep5(double x);

}  // namespace nlslab
