#include "nlslab/virial.hpp"

#include <cmath>

namespace nlslab {

std::vector<double> differentiate_series(const std::vector<double>& t,
                                         const std::vector<double>& f) {
  const int m = int(t.size());
  if (m < 3 || f.size() != t.size())
    throw ParameterError("differentiate_series: need at least 3 matching samples");
  // derivative of the quadratic through (t[i], f[i]), i = k-1, k, k+1, at x
  const auto lagrange3 = [&](int k, double x) {
    const double t0 = t[k - 1], t1 = t[k], t2 = t[k + 1];
    return f[k - 1] * (2.0 * x - t1 - t2) / ((t0 - t1) * (t0 - t2)) +
           f[k] * (2.0 * x - t0 - t2) / ((t1 - t0) * (t1 - t2)) +
           f[k + 1] * (2.0 * x - t0 - t1) / ((t2 - t0) * (t2 - t1));
  };
  std::vector<double> out(m);
  out[0] = lagrange3(1, t[0]);
  for (int k = 1; k + 1 < m; ++k) out[k] = lagrange3(k, t[k]);
  out[m - 1] = lagrange3(m - 2, t[m - 1]);
  return out;
}

VirialReport virial_identity_check(const Trajectory& traj, const VirialWeight& w) {
  if (traj.size() < 3)
    throw ParameterError("virial_identity_check: need at least 3 snapshots");
  const WeightTables tables = tabulate_weight(w, *traj.grid);

  VirialReport rep;
  rep.weight_name = w.name();
  rep.times = traj.times;
  rep.t_begin = traj.times.front();
  rep.t_end = traj.times.back();
  const int m = traj.size();
  rep.flux.resize(m);
  rep.hessian.resize(m);
  rep.pressure.resize(m);
  rep.bilaplacian.resize(m);
  rep.potential.resize(m);
  for (int k = 0; k < m; ++k) {
    const RadialField u = traj.field(k);
    rep.flux[k] = virial_flux(u, tables);
    const VirialRhs rhs = virial_rhs(u, tables, traj.params);
    rep.hessian[k] = rhs.hessian;
    // a forced-linear run evolves without the |u|^{p-1} u term, so its
    // flux-rate balance carries no pressure production
    rep.pressure[k] = traj.config.force_linear ? 0.0 : rhs.pressure;
    rep.bilaplacian[k] = rhs.bilaplacian;
    rep.potential[k] = rhs.potential;
  }
  rep.rate = differentiate_series(rep.times, rep.flux);
  rep.pointwise_residual.resize(m);
  rep.residual = 0.0;
  for (int k = 0; k < m; ++k) {
    const double rhs = rep.hessian[k] + rep.pressure[k] + rep.bilaplacian[k] + rep.potential[k];
    rep.pointwise_residual[k] = std::abs(rep.rate[k] - rhs);
    rep.residual = std::max(rep.residual, rep.pointwise_residual[k]);
  }
  return rep;
}

double virial_primitive_check(const Trajectory& traj, const VirialWeight& w) {
  if (traj.size() < 3)
    throw ParameterError("virial_primitive_check: need at least 3 snapshots");
  const WeightTables tables = tabulate_weight(w, *traj.grid);
  const RadialGrid& g = *traj.grid;
  const int m = traj.size();
  std::vector<double> variance(m), flux(m);
  for (int k = 0; k < m; ++k) {
    const RadialField u = traj.field(k);
    double acc = 0.0;
    for (int j = 0; j < g.n; ++j)
      acc += g.quad_w[j] * tables.a[j] * std::norm(u.values[j]);
    variance[k] = 0.5 * acc;
    flux[k] = virial_flux(u, tables);
  }
  const std::vector<double> rate = differentiate_series(traj.times, variance);
  double residual = 0.0;
  for (int k = 0; k < m; ++k) residual = std::max(residual, std::abs(rate[k] - flux[k]));
  return residual;
}

std::vector<double> morawetz_series(const Trajectory& traj, const ModelParams& params) {
  const RadialGrid& g = *traj.grid;
  const double half_p1 = 0.5 * (params.p + 1.0);
  const int m = traj.size();
  std::vector<double> density(m);
  for (int k = 0; k < m; ++k) {
    const VectorXcd& u = traj.snapshots[k];
    double acc = 0.0;
    for (int j = 0; j < g.n; ++j) {
      const double a2 = std::norm(u[j]);
      const double r = g.r[j];
      acc += g.quad_w[j] * (std::pow(a2, half_p1) / r + a2 / (r * r * r));
    }
    density[k] = acc;
  }
  std::vector<double> out(m, 0.0);
  for (int k = 1; k < m; ++k)
    out[k] = out[k - 1] + 0.5 * (density[k] + density[k - 1]) * (traj.times[k] - traj.times[k - 1]);
  return out;
}

double morawetz_accumulate(const Trajectory& traj, const ModelParams& params) {
  if (traj.size() == 0) throw ParameterError("morawetz_accumulate: empty trajectory");
  return morawetz_series(traj, params).back();
}

ConservationReport conservation_report(const Trajectory& traj) {
  ConservationReport rep;
  rep.times = traj.times;
  const int m = traj.size();
  rep.mass_series.resize(m);
  rep.energy_series.resize(m);
  for (int k = 0; k < m; ++k) {
    const RadialField u = traj.field(k);
    rep.mass_series[k] = mass(u);
    rep.energy_series[k] = energy(u, traj.params);
  }
  const double m0 = rep.mass_series.empty() ? 0.0 : rep.mass_series.front();
  const double e0 = rep.energy_series.empty() ? 0.0 : rep.energy_series.front();
  for (int k = 0; k < m; ++k) {
    if (m0 > 0.0)
      rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(rep.mass_series[k] / m0 - 1.0));
    rep.max_energy_drift = std::max(rep.max_energy_drift, std::abs(rep.energy_series[k] - e0) /
                                                              std::max(1.0, std::abs(e0)));
  }
  return rep;
}

}  // namespace nlslab
