#pragma once

#include <optional>
#include <vector>

#include "nlslab/fitting.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

using Eigen::MatrixXd;

/// Full eigendecomposition of the radial operator -Lap (+ V) on a grid.
///
/// The operator acts on u through the flat-measure substitution
/// v = r^{(d-1)/2} u, under which -Lap u corresponds to
/// -v'' + c_d v / r^2 with c_d = (d-1)(d-3)/4 and Dirichlet ends.  The
/// discrete matrix is symmetric tridiagonal plus the diagonal c_d/r^2 (+ V),
/// so its modes are orthogonal in the plain discrete inner product
/// <v, w> = dr * sum v_j w_j; they are stored normalized in that product.
struct LinearSpectrum {
  GridPtr grid;
  bool has_potential = false;
  VectorXd potential;      // V(r_j); empty when absent
  VectorXd eigenvalues;    // ascending
  MatrixXd modes;          // columns, dr-orthonormal, v-coordinates
  VectorXd stencil_diag;   // 2/dr^2 + c_d/r^2 (+ V)
  double stencil_off = 0;  // -1/dr^2

  double centrifugal() const {
    return 0.25 * double(grid->d - 1) * double(grid->d - 3);
  }
};

/// Diagonalize -Lap on the grid (no potential).
LinearSpectrum build_operator(GridPtr grid);

/// Diagonalize -Lap + V; the potential must be real and on the same grid.
LinearSpectrum build_operator(GridPtr grid, const RadialField& potential);
LinearSpectrum build_operator(GridPtr grid, const PotentialSpec& potential);

/// k-th eigenmode as a radial field (u-coordinates).
RadialField eigenmode(const LinearSpectrum& spec, int k);

/// Spectral coefficients of a field: c = dr * M^T (r^{(d-1)/2} u).
VectorXcd spectral_coefficients(const LinearSpectrum& spec, const RadialField& f);

/// Field with prescribed spectral coefficients.
RadialField from_spectral_coefficients(const LinearSpectrum& spec, const VectorXcd& c);

/// Apply the operator by its tridiagonal stencil (exact discrete action).
RadialField apply_operator(const LinearSpectrum& spec, const RadialField& f);
VectorXcd apply_operator(const LinearSpectrum& spec, const VectorXcd& u);
VectorXd apply_operator(const LinearSpectrum& spec, const VectorXd& u);

/// Apply the operator through its eigendecomposition (for consistency checks).
RadialField apply_via_spectrum(const LinearSpectrum& spec, const RadialField& f);

/// Reusable propagator exp(-i t A) for a fixed time step; caches the spectral
/// phases and applies the two dense passes with the worker pool.
class Propagator {
 public:
  Propagator(const LinearSpectrum& spec, double t);
  void apply_in_place(VectorXcd& u) const;
  double time_step() const { return t_; }

 private:
  const LinearSpectrum* spec_;
  double t_;
  VectorXd phase_re_, phase_im_;
};

/// exp(i t Lap) f by spectral decomposition; the spectrum must be built
/// without potential.  Exactly unitary in the discrete v-norm.
RadialField free_propagate(const LinearSpectrum& spec, const RadialField& f, double t);

/// exp(i t (Lap - V)) f; accepts any spectrum (reduces to free_propagate when
/// it carries no potential).
RadialField linear_propagate(const LinearSpectrum& spec, const RadialField& f, double t);

/// (-Lap + V + E)^{-1} g for E > 0 away from spectral poles.
RadialField resolvent_apply(const LinearSpectrum& spec, double E, const RadialField& g);

/// Free-dispersion decay probe: evolves f, tracks sup-norms over the times
/// where the wave has not meaningfully reached r_max/2, and fits the log-log
/// decay slope (expected -d/2 for well-localized data).
struct DecayFit {
  LineFit fit;
  double t_first = 0.0, t_last = 0.0;
  std::vector<double> times;       // accepted times
  std::vector<double> sup_norms;   // sup |u(t)|
  std::vector<double> tail_fraction;  // mass fraction beyond r_max/2
};

DecayFit dispersive_decay_probe(const LinearSpectrum& spec, const RadialField& f,
                                const std::vector<double>& times);

/// Angular average sigma_{d-2} * int_0^pi exp(-i z cos t) sin^{d-2} t dt by
/// adaptive quadrature; |I(0)| equals the sphere area sigma_{d-1} and the
/// large-z envelope of |I| decays like z^{-(d-1)/2}.
Complex angular_phase_integral(int d, double z);

}  // namespace nlslab
