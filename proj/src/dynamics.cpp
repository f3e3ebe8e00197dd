#include "nlslab/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace nlslab {

double smoothstep5(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

int Trajectory::index_of_time(double t) const {
  for (int i = 0; i < size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  std::ostringstream os;
  os << "trajectory: time " << t << " was not recorded";
  throw ParameterError(os.str());
}

namespace {

// Pointwise phase rotation u <- u * exp(-i dt (|u|^{p-1} [+ V])).
void phase_rotate(VectorXcd& u, double dt, double p, const VectorXd* pot, bool force_linear) {
  const double q = 0.5 * (p - 1.0);
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    double theta = 0.0;
    if (!force_linear) theta += std::pow(std::norm(u[j]), q);
    if (pot) theta += (*pot)[j];
    u[j] *= std::polar(1.0, -dt * theta);
  }
}

// Checks that the spectrum matches the requested V route and returns the
// phase-route potential samples (nullptr when V rides in the linear flow).
const VectorXd* resolve_potential_route(const ModelParams& params, const LinearSpectrum& spectrum,
                                        VectorXd& storage) {
  const bool v_zero = params.potential.is_zero();
  if (spectrum.has_potential) {
    if (v_zero)
      throw ParameterError("evolve: spectrum carries a potential but the model has none");
    const VectorXd expected = eval_potential_real(params.potential, *spectrum.grid);
    if ((expected - spectrum.potential).cwiseAbs().maxCoeff() >
        1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()))
      throw ParameterError("evolve: spectrum potential does not match the model potential");
    return nullptr;  // V is inside the linear flow
  }
  if (v_zero) return nullptr;
  storage = eval_potential_real(params.potential, *spectrum.grid);
  return &storage;
}

VectorXd sponge_damping(const RadialGrid& g, const SpongeSpec& sponge, double dt) {
  if (!(sponge.width > 0.0) || sponge.width >= 0.25 * g.r_max)
    throw ParameterError("sponge: width must lie in (0, r_max/4)");
  if (sponge.strength < 0.0) throw ParameterError("sponge: strength must be non-negative");
  VectorXd damp(g.n);
  const double r0 = g.r_max - sponge.width;
  for (int j = 0; j < g.n; ++j)
    damp[j] = std::exp(-dt * sponge.strength * smoothstep5((g.r[j] - r0) / sponge.width));
  return damp;
}

}  // namespace

RadialField strang_step(const RadialField& u, double dt, const ModelParams& params,
                        const LinearSpectrum& spectrum) {
  require_finite(u, "strang_step");
  if (!u.grid->same_as(*spectrum.grid))
    throw ParameterError("strang_step: field lives on a different grid");
  VectorXd pot_storage;
  const VectorXd* pot = resolve_potential_route(params, spectrum, pot_storage);
  RadialField out{u.grid, u.values};
  Propagator prop(spectrum, dt);
  phase_rotate(out.values, 0.5 * dt, params.p, pot, false);
  prop.apply_in_place(out.values);
  phase_rotate(out.values, 0.5 * dt, params.p, pot, false);
  if (!out.values.allFinite())
    throw BlowUpError("strang_step: non-finite samples after the step");
  return out;
}

Trajectory evolve(const RadialField& u0, const ModelParams& params, const StepperConfig& config,
                  const LinearSpectrum& spectrum) {
  Trajectory traj;
  traj.params = params;
  traj.config = config;
  traj.grid = u0.grid;
  traj.warnings = params.require_valid();

  require_finite(u0, "evolve");
  if (!u0.grid->same_as(*spectrum.grid))
    throw ParameterError("evolve: initial data lives on a different grid");
  if (!(config.dt > 0.0)) throw ParameterError("evolve: dt must be positive");
  if (config.t_end < 0.0) throw ParameterError("evolve: t_end must be non-negative");
  if (config.record_every < 1) throw ParameterError("evolve: record_every must be >= 1");
  if (config.potential_in_linear != spectrum.has_potential &&
      !(params.potential.is_zero() && !spectrum.has_potential))
    throw ParameterError("evolve: config potential route does not match the spectrum");

  const RadialGrid& g = *u0.grid;
  const double total = g.quad_w.dot(u0.values.cwiseAbs2());
  if (total > 0.0) {
    double outer = 0.0;
    for (int j = 0; j < g.n; ++j)
      if (g.r[j] > 0.5 * g.r_max) outer += g.quad_w[j] * std::norm(u0.values[j]);
    if (outer > 1e-6 * total)
      throw ParameterError("evolve: initial tail mass beyond r_max/2 exceeds 1e-6 of the total");
  }

  const long steps = std::lround(config.t_end / config.dt);
  if (std::abs(steps * config.dt - config.t_end) > 1e-9 * std::max(1.0, config.t_end))
    throw ParameterError("evolve: t_end must be a whole number of steps");

  VectorXd pot_storage;
  const VectorXd* pot = resolve_potential_route(params, spectrum, pot_storage);
  std::optional<VectorXd> damp;
  if (config.sponge) damp = sponge_damping(g, *config.sponge, config.dt);

  Propagator prop(spectrum, config.dt);
  VectorXcd u = u0.values;

  const auto record = [&](double t) {
    traj.times.push_back(t);
    traj.snapshots.push_back(u);
    const double m = g.quad_w.dot(u.cwiseAbs2());
    if (m > 0.0) {
      double outer = 0.0;
      for (int j = 0; j < g.n; ++j)
        if (g.r[j] > 0.9 * g.r_max) outer += g.quad_w[j] * std::norm(u[j]);
      if (outer > 0.01 * m) {
        std::ostringstream os;
        os << "wall contact at t = " << t << ": " << 100.0 * outer / m
           << "% of the mass sits in the outer 10% of the grid";
        traj.warnings.push_back(os.str());
      }
    }
  };

  record(0.0);
  for (long k = 0; k < steps; ++k) {
    phase_rotate(u, 0.5 * config.dt, params.p, pot, config.force_linear);
    prop.apply_in_place(u);
    phase_rotate(u, 0.5 * config.dt, params.p, pot, config.force_linear);
    if (damp) u.array() *= damp->array();
    if (!u.allFinite()) {
      std::ostringstream os;
      os << "evolve: non-finite samples after step " << (k + 1) << " (t = " << (k + 1) * config.dt
         << "); last recorded snapshot is at t = " << traj.times.back();
      throw BlowUpError(os.str());
    }
    if ((k + 1) % config.record_every == 0 || k + 1 == steps) record((k + 1) * config.dt);
  }
  return traj;
}

double duhamel_residual(const Trajectory& traj, double t, const LinearSpectrum& free_spec) {
  if (free_spec.has_potential)
    throw ParameterError("duhamel_residual: needs a potential-free spectrum");
  if (!free_spec.grid->same_as(*traj.grid))
    throw ParameterError("duhamel_residual: spectrum grid does not match the trajectory");
  const int it = traj.index_of_time(t);

  const RadialGrid& g = *traj.grid;
  VectorXd pot;
  const bool has_v = !traj.params.potential.is_zero();
  if (has_v) pot = eval_potential_real(traj.params.potential, g);

  const auto forcing = [&](const VectorXcd& u) {
    VectorXcd f = VectorXcd::Zero(g.n);
    if (!traj.config.force_linear) {
      const double q = 0.5 * (traj.params.p - 1.0);
      for (int j = 0; j < g.n; ++j) f[j] += std::pow(std::norm(u[j]), q) * u[j];
    }
    if (has_v)
      for (int j = 0; j < g.n; ++j) f[j] += pot[j] * u[j];
    return f;
  };

  // exp(i t Lap) u0 and the trapezoid-in-time Duhamel integral.
  RadialField lin = free_propagate(free_spec, traj.field(0), t);
  VectorXcd integral = VectorXcd::Zero(g.n);
  for (int k = 0; k <= it; ++k) {
    double w;
    if (it == 0)
      w = 0.0;
    else if (k == 0)
      w = 0.5 * (traj.times[1] - traj.times[0]);
    else if (k == it)
      w = 0.5 * (traj.times[it] - traj.times[it - 1]);
    else
      w = 0.5 * (traj.times[k + 1] - traj.times[k - 1]);
    if (w == 0.0) continue;
    RadialField fk{traj.grid, forcing(traj.snapshots[k])};
    RadialField prop = free_propagate(free_spec, fk, t - traj.times[k]);
    integral += w * prop.values;
  }
  VectorXcd defect = traj.snapshots[it] - lin.values + Complex(0, 1) * integral;
  return h1_norm({traj.grid, std::move(defect)});
}

RadialField sponge_apply(const RadialField& u, const SpongeSpec& sponge, double dt) {
  require_finite(u, "sponge_apply");
  const VectorXd damp = sponge_damping(*u.grid, sponge, dt);
  RadialField out{u.grid, u.values};
  out.values.array() *= damp.array();
  return out;
}

}  // namespace nlslab
