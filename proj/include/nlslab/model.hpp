#pragma once

#include <string>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

/// External potential profile.  The bump kind is the smooth compactly
/// supported well/hill v0 * exp(1 - 1/(1 - (r/r0)^2)) for r < r0 and exactly
/// zero beyond; it equals v0 at the origin.
struct PotentialSpec {
  enum class Kind { zero, bump };
  Kind kind = Kind::zero;
  double v0 = 0.0;  // depth (<0) or height (>0) at the center
  double r0 = 1.0;  // support radius

  static PotentialSpec none() { return {}; }
  static PotentialSpec bump(double v0, double r0) {
    return {Kind::bump, v0, r0};
  }

  bool is_zero() const { return kind == Kind::zero || v0 == 0.0; }
  double value(double r) const;
  double derivative(double r) const;
};

/// Evaluate a potential on a grid.  Rejects r0 <= 0 for the bump kind.
RadialField eval_potential(const PotentialSpec& spec, GridPtr grid);
VectorXd eval_potential_real(const PotentialSpec& spec, const RadialGrid& grid);

/// One validation finding for a parameter set.
struct ModelIssue {
  bool fatal = false;
  std::string message;
};

/// Model parameters of the evolution i u_t + Lap u = |u|^{p-1} u + V u.
struct ModelParams {
  int d = 5;
  double p = 1.6;
  PotentialSpec potential;

  double mass_critical_p() const { return 1.0 + 4.0 / d; }
  double energy_critical_p() const { return 1.0 + 4.0 / (d - 2); }

  /// Validation findings.  Fatal: d < 5, p <= 1, p at or above the
  /// energy-critical exponent, bad potential parameters.  Warnings: d below 11
  /// (full asymptotic theory needs very high dimension) and p at or below the
  /// mass-critical exponent.
  std::vector<ModelIssue> validate() const;

  /// Throws ParameterError listing every fatal issue; returns warnings.
  std::vector<std::string> require_valid() const;
};

}  // namespace nlslab
