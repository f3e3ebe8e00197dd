#pragma once

#include <Eigen/Core>
#include <complex>
#include <memory>

#include "nlslab/errors.hpp"

namespace nlslab {

using Complex = std::complex<double>;
using Eigen::ArrayXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Uniform radial grid for spherically symmetric fields on a ball of radius
/// r_max in dimension d.  Interior nodes r_j = j*dr, j = 1..n, with
/// dr = r_max/(n+1); the field convention is even parity across r = 0 and a
/// homogeneous Dirichlet wall at r = r_max.
struct RadialGrid {
  int d = 0;           // spatial dimension, >= 3
  int n = 0;           // number of interior nodes
  double r_max = 0.0;  // domain radius
  double dr = 0.0;     // node spacing r_max/(n+1)
  VectorXd r;          // nodes r_j = j*dr
  VectorXd quad_w;     // quadrature weights sigma_{d-1} * dr * r^{d-1}
  VectorXd half_power; // r^{(d-1)/2}, the flat-measure substitution weight

  bool same_as(const RadialGrid& o) const {
    return d == o.d && n == o.n && r_max == o.r_max;
  }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Surface measure of the unit sphere S^{d-1}, via log-Gamma to stay finite
/// for large d.
double sphere_area(int d);

/// Build a uniform radial grid.  Rejects d < 3, n < 16 and non-positive r_max.
GridPtr make_grid(int d, int n, double r_max);

/// Complex radial profile sampled on the interior nodes of a grid.
struct RadialField {
  GridPtr grid;
  VectorXcd values;

  Eigen::Index size() const { return values.size(); }
};

/// Make a field from explicit samples (size must match the grid).
RadialField make_field(GridPtr grid, VectorXcd values);

/// Zero field on a grid.
RadialField zero_field(GridPtr grid);

/// Sample a scalar function of r onto a grid.
template <class F>
RadialField sample_field(GridPtr grid, F&& f) {
  VectorXcd v(grid->n);
  for (int j = 0; j < grid->n; ++j) v[j] = Complex(f(grid->r[j]));
  return {std::move(grid), std::move(v)};
}

/// Throws DataError unless every sample of f is finite.
void require_finite(const RadialField& f, const char* where);

/// Throws ParameterError unless a and b live on the same grid.
void require_same_grid(const RadialField& a, const RadialField& b, const char* where);

/// Integral of a real density over R^d restricted to radial profiles:
/// sigma_{d-1} * int_0^{r_max} g(r) r^{d-1} dr by the trapezoid rule, with the
/// integrand extended by zero at r = 0 and r = r_max.
double integrate_density(const RadialGrid& g, const ArrayXd& density);

/// Same for a complex field whose imaginary part must be negligible.
double integrate(const RadialField& f);

/// Radial derivative by centered second-order differences.  The first node
/// uses the even-parity ghost value at r = 0, the last node a one-sided
/// second-order stencil.
RadialField radial_derivative(const RadialField& f);
VectorXcd radial_derivative(const RadialGrid& g, const VectorXcd& f);
VectorXd radial_derivative(const RadialGrid& g, const VectorXd& f);

/// L2(dx) norm.
double l2_norm(const RadialField& f);

/// Energy-space norm sqrt( int |f|^2 + |f_r|^2 dx ).
double h1_norm(const RadialField& f);

/// Energy-space inner product int f conj(g) + f_r conj(g_r) dx.
Complex h1_inner(const RadialField& f, const RadialField& g);

}  // namespace nlslab
