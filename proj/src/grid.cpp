#include "nlslab/grid.hpp"

#include <cmath>
#include <sstream>

namespace nlslab {

double sphere_area(int d) {
  // sigma_{d-1} = 2 pi^{d/2} / Gamma(d/2)
  return 2.0 * std::exp(0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d));
}

GridPtr make_grid(int d, int n, double r_max) {
  if (d < 3) throw ParameterError("make_grid: dimension must be >= 3, got " + std::to_string(d));
  if (n < 16) throw ParameterError("make_grid: need at least 16 nodes, got " + std::to_string(n));
  if (!(r_max > 0.0) || !std::isfinite(r_max))
    throw ParameterError("make_grid: r_max must be positive and finite");

  auto g = std::make_shared<RadialGrid>();
  g->d = d;
  g->n = n;
  g->r_max = r_max;
  g->dr = r_max / (n + 1);
  g->r = g->dr * VectorXd::LinSpaced(n, 1.0, double(n));
  const double sigma = sphere_area(d);
  g->quad_w = (sigma * g->dr) * g->r.array().pow(d - 1).matrix();
  g->half_power = g->r.array().pow(0.5 * (d - 1)).matrix();
  return g;
}

RadialField make_field(GridPtr grid, VectorXcd values) {
  if (!grid) throw ParameterError("make_field: null grid");
  if (values.size() != grid->n)
    throw ParameterError("make_field: sample count does not match grid");
  return {std::move(grid), std::move(values)};
}

RadialField zero_field(GridPtr grid) {
  const int n = grid->n;
  return {std::move(grid), VectorXcd::Zero(n)};
}

void require_finite(const RadialField& f, const char* where) {
  if (!f.values.allFinite())
    throw DataError(std::string(where) + ": field contains non-finite samples");
}

void require_same_grid(const RadialField& a, const RadialField& b, const char* where) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
    throw ParameterError(std::string(where) + ": fields live on different grids");
}

double integrate_density(const RadialGrid& g, const ArrayXd& density) {
  if (!density.allFinite()) throw DataError("integrate: non-finite density");
  return g.quad_w.dot(density.matrix());
}

double integrate(const RadialField& f) {
  require_finite(f, "integrate");
  const double scale = f.values.cwiseAbs().maxCoeff();
  const double imax = f.values.imag().cwiseAbs().maxCoeff();
  if (imax > 1e-10 * (1.0 + scale))
    throw DataError("integrate: field has a non-negligible imaginary part");
  return f.grid->quad_w.dot(f.values.real());
}

namespace {

template <class Vec>
Vec derivative_impl(const RadialGrid& g, const Vec& f) {
  const Eigen::Index n = f.size();
  if (n != g.n) throw ParameterError("radial_derivative: size mismatch");
  Vec out(n);
  const double inv2 = 1.0 / (2.0 * g.dr);
  for (Eigen::Index j = 1; j + 1 < n; ++j) out[j] = (f[j + 1] - f[j - 1]) * inv2;
  // Even parity fixes the ghost value at r = 0 to (4 f_1 - f_2)/3.
  out[0] = (f[1] - (4.0 * f[0] - f[1]) / 3.0) * inv2;
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
  return out;
}

}  // namespace

VectorXcd radial_derivative(const RadialGrid& g, const VectorXcd& f) {
  return derivative_impl(g, f);
}

VectorXd radial_derivative(const RadialGrid& g, const VectorXd& f) {
  return derivative_impl(g, f);
}

RadialField radial_derivative(const RadialField& f) {
  require_finite(f, "radial_derivative");
  return {f.grid, derivative_impl(*f.grid, f.values)};
}

double l2_norm(const RadialField& f) {
  require_finite(f, "l2_norm");
  return std::sqrt(f.grid->quad_w.dot(f.values.cwiseAbs2()));
}

double h1_norm(const RadialField& f) {
  require_finite(f, "h1_norm");
  const VectorXcd fr = radial_derivative(*f.grid, f.values);
  return std::sqrt(f.grid->quad_w.dot(f.values.cwiseAbs2()) +
                   f.grid->quad_w.dot(fr.cwiseAbs2()));
}

Complex h1_inner(const RadialField& f, const RadialField& g) {
  require_same_grid(f, g, "h1_inner");
  require_finite(f, "h1_inner");
  require_finite(g, "h1_inner");
  const VectorXcd fr = radial_derivative(*f.grid, f.values);
  const VectorXcd gr = radial_derivative(*g.grid, g.values);
  const VectorXd& w = f.grid->quad_w;
  Complex acc(0.0, 0.0);
  for (Eigen::Index j = 0; j < f.values.size(); ++j)
    acc += w[j] * (f.values[j] * std::conj(g.values[j]) + fr[j] * std::conj(gr[j]));
  return acc;
}

}  // namespace nlslab
