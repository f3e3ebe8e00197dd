#include "nlslab/boundstates.hpp"

#include <cmath>
#include <sstream>

namespace nlslab {

namespace {

// v-coordinate diagonal of -Lap + V (the off-diagonal is -1/dr^2).
VectorXd operator_diagonal(const RadialGrid& g, const PotentialSpec& pot) {
  const double cd = 0.25 * double(g.d - 1) * double(g.d - 3);
  const double inv2 = 1.0 / (g.dr * g.dr);
  VectorXd diag = (2.0 * inv2) + (cd * g.r.array().square().inverse());
  for (int j = 0; j < g.n; ++j) diag[j] += pot.value(g.r[j]);
  return diag;
}

VectorXd apply_H(const RadialGrid& g, const VectorXd& diag, const VectorXd& q) {
  VectorXd v = q.cwiseProduct(g.half_power);
  VectorXd av(g.n);
  const double off = -1.0 / (g.dr * g.dr);
  for (int j = 0; j < g.n; ++j) {
    double acc = diag[j] * v[j];
    if (j > 0) acc += off * v[j - 1];
    if (j + 1 < g.n) acc += off * v[j + 1];
    av[j] = acc;
  }
  return av.cwiseQuotient(g.half_power);
}

// Thomas solve of (tridiag(diag) - shift) x = rhs in v-coordinates.
VectorXd solve_tridiagonal(const RadialGrid& g, const VectorXd& diag, const VectorXd& rhs_v) {
  const int n = g.n;
  const double off = -1.0 / (g.dr * g.dr);
  VectorXd c(n), d(n);
  double pivot = diag[0];
  if (std::abs(pivot) < 1e-14 * std::abs(off))
    throw NumericalError("bound-state solve: singular tridiagonal pivot");
  c[0] = off / pivot;
  d[0] = rhs_v[0] / pivot;
  for (int j = 1; j < n; ++j) {
    pivot = diag[j] - off * c[j - 1];
    if (std::abs(pivot) < 1e-14 * std::abs(off))
      throw NumericalError("bound-state solve: singular tridiagonal pivot");
    c[j] = off / pivot;
    d[j] = (rhs_v[j] - off * d[j - 1]) / pivot;
  }
  VectorXd x(n);
  x[n - 1] = d[n - 1];
  for (int j = n - 2; j >= 0; --j) x[j] = d[j] - c[j] * x[j + 1];
  return x;
}

double defect_h_norm(const RadialGrid& g, GridPtr grid, const VectorXd& diag, double p, double E,
                     const VectorXd& q) {
  VectorXd defect = apply_H(g, diag, q) - E * q;
  for (int j = 0; j < g.n; ++j) defect[j] += std::pow(std::abs(q[j]), p - 1.0) * q[j];
  return h1_norm({std::move(grid), defect.cast<Complex>()});
}

void classify_profile(BoundState& bs, const ModelParams& params) {
  const RadialGrid& g = *bs.profile.grid;
  const VectorXd q = bs.profile.values.real();
  const double peak = q.cwiseAbs().maxCoeff();
  bs.positive = q.minCoeff() > -1e-9 * peak;
  const double support = params.potential.is_zero() ? 0.0 : params.potential.r0;
  bs.monotone_tail = true;
  for (int j = 1; j < g.n; ++j)
    if (g.r[j - 1] > support && std::abs(q[j]) > std::abs(q[j - 1]) + 1e-12 * peak) {
      bs.monotone_tail = false;
      break;
    }
}

}  // namespace

LinearGroundState linear_ground_state(const LinearSpectrum& spec) {
  RadialField mode = eigenmode(spec, 0);
  // ground modes of the tridiagonal operator are nodeless; fix the sign
  Eigen::Index peak;
  mode.values.cwiseAbs().maxCoeff(&peak);
  if (mode.values[peak].real() < 0.0) mode.values = -mode.values;
  mode.values /= std::sqrt(mass(mode));
  return {spec.eigenvalues[0], std::move(mode)};
}

double bound_state_residual(const ModelParams& params, const RadialField& q, double E) {
  require_finite(q, "bound_state_residual");
  const RadialGrid& g = *q.grid;
  const VectorXd diag = operator_diagonal(g, params.potential);
  return defect_h_norm(g, q.grid, diag, params.p, E, q.values.real());
}

BoundState petviashvili_solve(const ModelParams& params, const LinearSpectrum& spectrum,
                              double E_target, const RadialField& seed, double tol, int max_iter) {
  params.require_valid();
  if (!(E_target < 0.0))
    throw ParameterError("petviashvili_solve: frequency must sit below the essential spectrum");
  if ((spectrum.eigenvalues.array() - E_target).abs().minCoeff() < 1e-12)
    throw SingularityError("petviashvili_solve: frequency collides with a linear eigenvalue");
  require_finite(seed, "petviashvili_solve");
  if (!seed.grid->same_as(*spectrum.grid))
    throw ParameterError("petviashvili_solve: seed lives on a different grid");
  const RadialGrid& g = *spectrum.grid;
  VectorXd q0 = seed.values.real();
  {
    const double peak = q0.cwiseAbs().maxCoeff();
    if (peak == 0.0) throw ParameterError("petviashvili_solve: zero seed");
    if (seed.values.imag().cwiseAbs().maxCoeff() > 1e-12 * peak ||
        q0.minCoeff() < -1e-9 * peak)
      throw ParameterError("petviashvili_solve: seed must be real and non-negative");
  }

  const VectorXd diag = operator_diagonal(g, params.potential);
  const double kappa = params.p / (params.p - 1.0);
  const double qpow = params.p - 1.0;

  double best_res = std::numeric_limits<double>::infinity();
  for (double omega : {1.0, 0.5}) {
    VectorXd q = q0;
    double res = std::numeric_limits<double>::infinity();
    int worse = 0;
    bool retry = false;
    for (int it = 0; it < max_iter; ++it) {
      VectorXd nl(g.n);
      for (int j = 0; j < g.n; ++j) nl[j] = -std::pow(std::abs(q[j]), qpow) * q[j];
      const VectorXd lq = apply_H(g, diag, q) - E_target * q;
      const double num = integrate_density(g, (lq.array() * q.array()));
      const double den = integrate_density(g, (nl.array() * q.array()));
      if (den == 0.0 || !(num / den > 0.0)) {
        retry = true;
        break;
      }
      const double gamma = num / den;
      RadialField step = resolvent_apply(spectrum, -E_target, {spectrum.grid, nl.cast<Complex>()});
      q = (1.0 - omega) * q + omega * std::pow(gamma, kappa) * step.values.real();
      if (!q.allFinite()) {
        retry = true;
        break;
      }
      const double new_res = defect_h_norm(g, spectrum.grid, diag, params.p, E_target, q);
      worse = (new_res > res) ? worse + 1 : 0;
      res = new_res;
      best_res = std::min(best_res, res);
      if (res <= tol) {
        BoundState bs;
        bs.profile = {spectrum.grid, q.cast<Complex>()};
        bs.frequency = E_target;
        bs.residual = res;
        bs.tolerance = tol;
        bs.amplitude = q[0];
        classify_profile(bs, params);
        return bs;
      }
      if (worse >= 12) {
        retry = true;
        break;
      }
    }
    if (!retry) break;  // exhausted iterations at this relaxation
  }
  std::ostringstream os;
  os << "petviashvili_solve: no convergence at E = " << E_target << " (best residual " << best_res
     << ", tolerance " << tol << ")";
  throw SolverError(os.str(), best_res);
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

namespace {

struct ShotResult {
  enum class Outcome { sign_flip, blow_up, decayed };
  Outcome outcome = Outcome::decayed;
  VectorXd node_values;  // filled only when requested
};

// Embedded Dormand-Prince 5(4) on the 2-vector (Q, Q'); integrates the radial
// profile equation from r ~ 0 outward, classifying the shot and optionally
// recording values at the grid nodes.
class Shooter {
 public:
  Shooter(const ModelParams& params, const RadialGrid& grid, double E)
      : p_(params.p), pot_(params.potential), grid_(grid), E_(E) {}

  ShotResult shoot(double q0, bool record) const {
    ShotResult result;
    if (record) result.node_values = VectorXd::Zero(grid_.n);
    const double c0 = pot_.value(0.0) - E_ + std::pow(std::abs(q0), p_ - 1.0);
    double r = 1e-6 * grid_.dr;
    double y[2] = {q0 * (1.0 + c0 * r * r / (2.0 * grid_.d)), q0 * c0 * r / grid_.d};
    double h = 0.1 * grid_.dr;
    int node = 0;
    const double flip_floor = -1e-10 * q0;
    const double grow_floor = 1e-9 * q0;
    while (node < grid_.n) {
      const double target = grid_.r[node];
      bool at_node = false;
      double step = h;
      if (r + step >= target) {
        step = target - r;
        at_node = true;
      }
      double y_new[2], err;
      dp_step(r, y, step, y_new, err);
      const double tol = 1e-12 * (std::abs(y[0]) + std::abs(y[1]) + q0 * 1e-3);
      if (err > tol && step > 1e-14 * grid_.dr) {
        h = std::max(0.25 * step, 0.9 * step * std::pow(tol / err, 0.2));
        continue;
      }
      r += step;
      y[0] = y_new[0];
      y[1] = y_new[1];
      if (!at_node) h = std::min(step * std::min(4.0, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2)), grid_.dr);
      if (at_node) {
        if (record) result.node_values[node] = y[0];
        ++node;
      }
      if (y[0] < flip_floor) {
        result.outcome = ShotResult::Outcome::sign_flip;
        return result;
      }
      // Beyond the well the equation is non-oscillatory, so a rising positive
      // profile can only keep growing.
      if ((pot_.is_zero() || r > pot_.r0) && y[1] > 0.0 && y[0] > grow_floor) {
        result.outcome = ShotResult::Outcome::blow_up;
        return result;
      }
    }
    result.outcome = ShotResult::Outcome::decayed;
    return result;
  }

 private:
  void rhs(double r, const double* y, double* dy) const {
    const double nl = std::pow(std::abs(y[0]), p_ - 1.0);
    dy[0] = y[1];
    dy[1] = -(grid_.d - 1) / r * y[1] + (pot_.value(r) - E_ + nl) * y[0];
  }

  void dp_step(double r, const double* y, double h, double* out, double& err) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    double k1[2], k2[2], k3[2], k4[2], k5[2], k6[2], k7[2], tmp[2];
    rhs(r, y, k1);
    for (int i = 0; i < 2; ++i) tmp[i] = y[i] + h * (0.2 * k1[i]);
    rhs(r + c2 * h, tmp, k2);
    for (int i = 0; i < 2; ++i) tmp[i] = y[i] + h * (3.0 / 40 * k1[i] + 9.0 / 40 * k2[i]);
    rhs(r + c3 * h, tmp, k3);
    for (int i = 0; i < 2; ++i)
      tmp[i] = y[i] + h * (44.0 / 45 * k1[i] - 56.0 / 15 * k2[i] + 32.0 / 9 * k3[i]);
    rhs(r + c4 * h, tmp, k4);
    for (int i = 0; i < 2; ++i)
      tmp[i] = y[i] + h * (19372.0 / 6561 * k1[i] - 25360.0 / 2187 * k2[i] +
                           64448.0 / 6561 * k3[i] - 212.0 / 729 * k4[i]);
    rhs(r + c5 * h, tmp, k5);
    for (int i = 0; i < 2; ++i)
      tmp[i] = y[i] + h * (9017.0 / 3168 * k1[i] - 355.0 / 33 * k2[i] + 46732.0 / 5247 * k3[i] +
                           49.0 / 176 * k4[i] - 5103.0 / 18656 * k5[i]);
    rhs(r + h, tmp, k6);
    for (int i = 0; i < 2; ++i)
      out[i] = y[i] + h * (35.0 / 384 * k1[i] + 500.0 / 1113 * k3[i] + 125.0 / 192 * k4[i] -
                           2187.0 / 6784 * k5[i] + 11.0 / 84 * k6[i]);
    rhs(r + h, out, k7);
    err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double e5 = y[i] + h * (5179.0 / 57600 * k1[i] + 7571.0 / 16695 * k3[i] +
                                    393.0 / 640 * k4[i] - 92097.0 / 339200 * k5[i] +
                                    187.0 / 2100 * k6[i] + 1.0 / 40 * k7[i]);
      err = std::max(err, std::abs(out[i] - e5));
    }
  }

  double p_;
  PotentialSpec pot_;
  const RadialGrid& grid_;
  double E_;
};

}  // namespace

ShotClass classify_shot(const ModelParams& params, const RadialGrid& grid, double E, double q0) {
  if (!(E < 0.0)) throw ParameterError("classify_shot: frequency must be negative");
  if (!(q0 > 0.0)) throw ParameterError("classify_shot: amplitude must be positive");
  const Shooter shooter(params, grid, E);
  switch (shooter.shoot(q0, false).outcome) {
    case ShotResult::Outcome::sign_flip: return ShotClass::sign_flip;
    case ShotResult::Outcome::blow_up: return ShotClass::blow_up;
    default: return ShotClass::decayed;
  }
}

BoundState shoot_solve(const ModelParams& params, GridPtr grid, double E,
                       std::pair<double, double> amplitude_bracket, double tol) {
  params.require_valid();
  if (!(E < 0.0))
    throw ParameterError("shoot_solve: frequency must sit below the essential spectrum");
  double lo = amplitude_bracket.first, hi = amplitude_bracket.second;
  if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("shoot_solve: need 0 < lo < hi");

  const RadialGrid& g = *grid;
  const Shooter shooter(params, g, E);
  const auto outcome = [&](double q0) { return shooter.shoot(q0, false).outcome; };

  const auto lo_out = outcome(lo);
  const auto hi_out = outcome(hi);
  if (lo_out == hi_out || lo_out == ShotResult::Outcome::blow_up ||
      hi_out == ShotResult::Outcome::sign_flip)
    throw BracketError(
        "shoot_solve: bracket endpoints do not straddle the profile "
        "(expect sign-flip at the lower amplitude and blow-up at the upper)");

  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto out = outcome(mid);
    if (out == ShotResult::Outcome::sign_flip)
      lo = mid;
    else if (out == ShotResult::Outcome::blow_up)
      hi = mid;
    else
      break;  // clean decay within integration accuracy
  }
  const double q0 = 0.5 * (lo + hi);
  ShotResult shot = shooter.shoot(q0, true);

  // The recorded shot is exact until roundoff re-excites the growing branch;
  // graft the far-field decay beyond the deepest clean point.
  VectorXd q = shot.node_values;
  const double support = params.potential.is_zero() ? 0.0 : params.potential.r0;
  int jg = 0;
  double qmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.n; ++j) {
    if (q[j] <= 0.0) break;
    if (g.r[j] > support && q[j] < qmin) {
      qmin = q[j];
      jg = j;
    }
  }
  if (jg > 0) {
    const double kappa = std::sqrt(-E);
    const double rg = g.r[jg];
    for (int j = jg + 1; j < g.n; ++j)
      q[j] = q[jg] * std::pow(rg / g.r[j], 0.5 * (g.d - 1)) * std::exp(-kappa * (g.r[j] - rg));
  }

  // Newton polish onto the discrete operator.
  const VectorXd diag = operator_diagonal(g, params.potential);
  double res = defect_h_norm(g, grid, diag, params.p, E, q);
  for (int it = 0; it < 60 && res > tol; ++it) {
    VectorXd defect = apply_H(g, diag, q) - E * q;
    for (int j = 0; j < g.n; ++j) defect[j] += std::pow(std::abs(q[j]), params.p - 1.0) * q[j];
    VectorXd jac_diag = diag - VectorXd::Constant(g.n, E);
    for (int j = 0; j < g.n; ++j)
      jac_diag[j] += params.p * std::pow(std::abs(q[j]), params.p - 1.0);
    const VectorXd dv = solve_tridiagonal(g, jac_diag, defect.cwiseProduct(g.half_power));
    q -= dv.cwiseQuotient(g.half_power);
    res = defect_h_norm(g, grid, diag, params.p, E, q);
  }
  if (res > tol)
    throw SolverError("shoot_solve: Newton polish did not reach the tolerance", res);

  BoundState bs;
  bs.profile = {std::move(grid), q.cast<Complex>()};
  bs.frequency = E;
  bs.residual = res;
  bs.tolerance = tol;
  bs.amplitude = q[0];
  classify_profile(bs, params);
  return bs;
}

TailBoundReport tail_bound_check(const RadialField& q, double support_radius) {
  require_finite(q, "tail_bound_check");
  const RadialGrid& g = *q.grid;
  const double lo = std::max({support_radius * 1.5, 4.0 * g.dr, 1e-3});
  const double hi = 0.75 * g.r_max;
  if (!(hi > lo * 1.5))
    throw ParameterError("tail_bound_check: grid leaves no tail window beyond the support");

  TailBoundReport rep;
  // pointwise envelope on nodes, restricted to the resolvable part
  std::vector<double> pr, pc;
  const double peak = q.values.cwiseAbs().maxCoeff();
  for (int j = 0; j < g.n; ++j) {
    const double r = g.r[j];
    if (r < lo || r > hi) continue;
    const double a = std::abs(q.values[j]);
    if (a > 1e-140 * std::max(1.0, peak)) {
      pr.push_back(r);
      pc.push_back(a * std::pow(r, g.d - 2));
    }
  }
  if (pr.size() < 8)
    throw DegenerateInputError("tail_bound_check: tail underflowed everywhere in the window");
  rep.degenerate_tail = pr.back() < 0.9 * hi;
  rep.window_lo = pr.front();
  rep.window_hi = pr.back();
  rep.pointwise_constant = *std::max_element(pc.begin(), pc.end());
  rep.pointwise_slope = fit_loglog(pr, pc).slope;

  std::vector<double> radii;
  const int bins = 24;
  for (int i = 0; i < bins; ++i)
    radii.push_back(rep.window_lo * std::pow(rep.window_hi / rep.window_lo, double(i) / (bins - 1)));
  const TailProfile prof = tail_profile(q, radii);
  std::vector<double> mr, mv, gr, gv;
  for (int i = 0; i < bins; ++i) {
    if (prof.mass_tail[i] > 1e-280) {
      mr.push_back(radii[i]);
      mv.push_back(std::pow(radii[i], g.d - 4) * prof.mass_tail[i]);
    }
    if (prof.grad_tail[i] > 1e-280) {
      gr.push_back(radii[i]);
      gv.push_back(std::pow(radii[i], g.d - 2) * prof.grad_tail[i]);
    }
  }
  if (mr.size() < 4 || gr.size() < 4)
    throw DegenerateInputError("tail_bound_check: tail integrals underflowed in the window");
  rep.sup_mass_ratio = *std::max_element(mv.begin(), mv.end());
  rep.sup_grad_ratio = *std::max_element(gv.begin(), gv.end());
  rep.mass_slope = fit_loglog(mr, mv).slope;
  rep.grad_slope = fit_loglog(gr, gv).slope;

  constexpr double growth_threshold = 0.25;
  rep.mass_bounded = rep.mass_slope <= growth_threshold;
  rep.grad_bounded = rep.grad_slope <= growth_threshold;
  rep.pointwise_bounded = rep.pointwise_slope <= growth_threshold;
  return rep;
}

TailBoundReport tail_bound_check(const BoundState& q, const ModelParams& params) {
  if (q.residual > 1e-6)
    throw ParameterError("tail_bound_check: bound state residual too large to trust the tail");
  return tail_bound_check(q.profile, params.potential.is_zero() ? 0.0 : params.potential.r0);
}

Branch continue_branch(const ModelParams& params, const LinearSpectrum& spectrum, double E_begin,
                       double E_end, int steps, double tol) {
  params.require_valid();
  Branch branch;
  if (steps <= 0) return branch;
  if (spectrum.eigenvalues[0] >= 0.0)
    throw ParameterError("continue_branch: the linear operator has no bound state");

  const LinearGroundState lin = linear_ground_state(spectrum);
  RadialField seed = lin.mode;
  seed.values *= 0.05;

  for (int k = 0; k < steps; ++k) {
    const double E =
        (steps == 1) ? E_begin : E_begin + (E_end - E_begin) * double(k) / double(steps - 1);
    try {
      BoundState bs = petviashvili_solve(params, spectrum, E, seed, tol);
      if (!bs.positive)
        throw SolverError("branch termination: profile lost positivity", bs.residual);
      seed = bs.profile;
      BranchPoint pt;
      pt.amplitude = bs.amplitude;
      pt.state_mass = mass(bs.profile);
      pt.state_energy = energy(bs.profile, params);
      pt.state = std::move(bs);
      branch.points.push_back(std::move(pt));
    } catch (const Error& err) {
      branch.failure_index = k;
      branch.failure_reason = err.what();
      break;
    }
  }
  return branch;
}

}  // namespace nlslab
