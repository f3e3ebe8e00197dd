#pragma once

#include <functional>
#include <optional>

#include "nlslab/fitting.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

/// Total mass int |u|^2 dx.
double mass(const RadialField& u);

/// Energy int 1/2 |grad u|^2 + 1/2 V |u|^2 + |u|^{p+1}/(p+1) dx.
double energy(const RadialField& u, const ModelParams& params);

/// Radial weight a(r) entering the momentum-flux identity.  Built-in kinds
/// carry closed forms for a and its first four derivatives; the convex_linear
/// truncation keeps a equal to the base profile for r <= R, continues it
/// linearly with frozen slope beyond 2R, and blends on [R, 2R] with a
/// polynomial taper of a'' that keeps a convex and four times differentiable.
struct VirialWeight {
  enum class Kind { abs, quadratic, quartic, custom };
  enum class Truncation { none, convex_linear };

  Kind kind = Kind::quadratic;
  Truncation truncation = Truncation::none;
  double R = 0.0;  // truncation radius (convex_linear only)

  // custom profiles: a, a', a'' required; a''', a'''' needed for the
  // bi-Laplacian term
  std::function<double(double)> f0, f1, f2;
  std::function<double(double)> f3, f4;

  static VirialWeight abs_weight();
  static VirialWeight quadratic();
  static VirialWeight quadratic_truncated(double R);
  static VirialWeight quartic();
  static VirialWeight quartic_truncated(double R);
  static VirialWeight custom(std::function<double(double)> a, std::function<double(double)> a1,
                             std::function<double(double)> a2,
                             std::function<double(double)> a3 = nullptr,
                             std::function<double(double)> a4 = nullptr);

  std::string name() const;
};

/// Weight profiles tabulated on a grid.  bilap is empty when the weight
/// cannot supply four derivatives.
struct WeightTables {
  VectorXd a, da, dda;  // a, a', a''
  VectorXd lap;         // a'' + (d-1) a'/r
  VectorXd bilap;       // fourth-order radial bi-Laplacian, may be empty
};

WeightTables tabulate_weight(const VirialWeight& w, const RadialGrid& grid);

/// Momentum flux int a'(r) Im(conj(u) u_r) dx.
double virial_flux(const RadialField& u, const VirialWeight& w);
double virial_flux(const RadialField& u, const WeightTables& t);

/// The four production terms of the flux rate: 2 int a''|u_r|^2,
/// ((p-1)/(p+1)) int |u|^{p+1} Lap a, -1/2 int |u|^2 LapLap a,
/// - int a' V' |u|^2.
struct VirialRhs {
  double hessian = 0.0;
  double pressure = 0.0;
  double bilaplacian = 0.0;
  double potential = 0.0;
  double sum() const { return hessian + pressure + bilaplacian + potential; }
};

VirialRhs virial_rhs(const RadialField& u, const VirialWeight& w, const ModelParams& params);
VirialRhs virial_rhs(const RadialField& u, const WeightTables& t, const ModelParams& params);

/// Weighted one-dimensional comparison
///   ((d+beta)/2)^2 int |f|^2 |x|^beta dx  <=  int |f_r|^2 |x|^{beta+2} dx.
struct HardyCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

HardyCheck hardy_check(const RadialField& f, double beta);

/// int |u|^2 |x|^k dx for integer k >= 0.
double weighted_moment(const RadialField& u, int k);

/// int |u| |u_r| |x|^j dx.
double cauchy_schwarz_moment(const RadialField& u, int j);

/// Mass and gradient content beyond each radius.
struct TailProfile {
  int d = 0;
  std::vector<double> radii;
  std::vector<double> mass_tail;
  std::vector<double> grad_tail;
};

TailProfile tail_profile(const RadialField& u, const std::vector<double>& radii);

/// Log-log decay fit of the mass tail plus the polynomial-envelope supremum
/// sup_R R^{d-4} M(R) over the profile radii.
struct DecayLaw {
  LineFit fit;         // slope of log M vs log R
  double constant = 0; // exp(intercept)
  double max_ratio = 0;
};

DecayLaw decay_exponent_fit(const TailProfile& profile);

}  // namespace nlslab
