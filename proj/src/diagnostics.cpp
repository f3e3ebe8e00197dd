#include "nlslab/diagnostics.hpp"

#include <cmath>

namespace nlslab {

double mass(const RadialField& u) {
  require_finite(u, "mass");
  return u.grid->quad_w.dot(u.values.cwiseAbs2());
}

double energy(const RadialField& u, const ModelParams& params) {
  require_finite(u, "energy");
  const RadialGrid& g = *u.grid;
  const VectorXcd ur = radial_derivative(g, u.values);
  const double half_p1 = 0.5 * (params.p + 1.0);
  double acc = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double a2 = std::norm(u.values[j]);
    double density = 0.5 * std::norm(ur[j]) + std::pow(a2, half_p1) / (params.p + 1.0);
    if (!params.potential.is_zero()) density += 0.5 * params.potential.value(g.r[j]) * a2;
    acc += g.quad_w[j] * density;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Virial weights
// ---------------------------------------------------------------------------

namespace {

// Dense polynomial in one variable, coefficients by ascending power.
struct Poly {
  std::vector<double> c;

  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
    return acc;
  }
  Poly derivative() const {
    if (c.size() <= 1) return {{0.0}};
    Poly out;
    out.c.resize(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) out.c[i - 1] = double(i) * c[i];
    return out;
  }
  Poly antiderivative() const {
    Poly out;
    out.c.resize(c.size() + 1);
    out.c[0] = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) out.c[i + 1] = c[i] / double(i + 1);
    return out;
  }
  Poly times(const Poly& o) const {
    Poly out;
    out.c.assign(c.size() + o.c.size() - 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < o.c.size(); ++j) out.c[i + j] += c[i] * o.c[j];
    return out;
  }
  Poly scaled(double s) const {
    Poly out = *this;
    for (double& v : out.c) v *= s;
    return out;
  }
  Poly plus_constant(double s) const {
    Poly out = *this;
    out.c[0] += s;
    return out;
  }
};

// Taper 1 -> 0 on [0,1] with zero first and second derivatives at both ends.
const Poly kTaper{{1.0, 0.0, 0.0, -10.0, 15.0, -6.0}};

struct BaseProfile {
  // closed forms of a and derivatives for the untruncated region, plus the
  // exact Laplacians (the generic combination of a', .., a'''' suffers
  // catastrophic cancellation near the origin)
  std::function<double(double)> a, a1, a2, a3, a4;
  std::function<double(double)> lap, bilap;  // of r and d
  Poly a2_blend;  // a''(R(1+x)) as a polynomial in x (for the blend region)
};

BaseProfile base_profile(VirialWeight::Kind kind, double R, int d) {
  switch (kind) {
    case VirialWeight::Kind::quadratic:
      return {[](double r) { return r * r; },
              [](double r) { return 2.0 * r; },
              [](double) { return 2.0; },
              [](double) { return 0.0; },
              [](double) { return 0.0; },
              [d](double) { return 2.0 * d; },
              [](double) { return 0.0; },
              kTaper.scaled(2.0)};
    case VirialWeight::Kind::quartic:
      return {[](double r) { return r * r * r * r; },
              [](double r) { return 4.0 * r * r * r; },
              [](double r) { return 12.0 * r * r; },
              [](double r) { return 24.0 * r; },
              [](double) { return 24.0; },
              [d](double r) { return 4.0 * (d + 2) * r * r; },
              [d](double) { return 8.0 * d * (d + 2); },
              Poly{{1.0, 2.0, 1.0}}.times(kTaper).scaled(12.0 * R * R)};
    default:
      throw ParameterError("virial weight: truncation supports the quadratic and quartic kinds");
  }
}

}  // namespace

VirialWeight VirialWeight::abs_weight() {
  VirialWeight w;
  w.kind = Kind::abs;
  return w;
}
VirialWeight VirialWeight::quadratic() {
  VirialWeight w;
  w.kind = Kind::quadratic;
  return w;
}
VirialWeight VirialWeight::quadratic_truncated(double R) {
  VirialWeight w;
  w.kind = Kind::quadratic;
  w.truncation = Truncation::convex_linear;
  w.R = R;
  return w;
}
VirialWeight VirialWeight::quartic() {
  VirialWeight w;
  w.kind = Kind::quartic;
  return w;
}
VirialWeight VirialWeight::quartic_truncated(double R) {
  VirialWeight w;
  w.kind = Kind::quartic;
  w.truncation = Truncation::convex_linear;
  w.R = R;
  return w;
}
VirialWeight VirialWeight::custom(std::function<double(double)> a, std::function<double(double)> a1,
                                  std::function<double(double)> a2,
                                  std::function<double(double)> a3,
                                  std::function<double(double)> a4) {
  if (!a || !a1 || !a2)
    throw ParameterError("virial weight: custom kind needs a, a' and a''");
  VirialWeight w;
  w.kind = Kind::custom;
  w.f0 = std::move(a);
  w.f1 = std::move(a1);
  w.f2 = std::move(a2);
  w.f3 = std::move(a3);
  w.f4 = std::move(a4);
  return w;
}

std::string VirialWeight::name() const {
  std::string base;
  switch (kind) {
    case Kind::abs: base = "abs"; break;
    case Kind::quadratic: base = "quadratic"; break;
    case Kind::quartic: base = "quartic"; break;
    case Kind::custom: base = "custom"; break;
  }
  if (truncation == Truncation::convex_linear)
    base += "_truncated_R" + std::to_string(R);
  return base;
}

WeightTables tabulate_weight(const VirialWeight& w, const RadialGrid& grid) {
  const int d = grid.d;
  const int n = grid.n;
  const double c = double(d - 1) * double(d - 3);
  WeightTables t;
  t.a.resize(n);
  t.da.resize(n);
  t.dda.resize(n);
  t.lap.resize(n);
  t.bilap.resize(n);

  // generic radial Laplacians from a', a'', a''', a''''
  const auto generic_lap = [&](double r, double a1, double a2) {
    return a2 + (d - 1) * a1 / r;
  };
  const auto generic_bilap = [&](double r, double a1, double a2, double a3, double a4) {
    return a4 + 2.0 * (d - 1) * a3 / r + c * a2 / (r * r) - c * a1 / (r * r * r);
  };

  if (w.kind == VirialWeight::Kind::abs) {
    if (w.truncation != VirialWeight::Truncation::none)
      throw ParameterError("virial weight: the abs kind is already linear; no truncation");
    for (int j = 0; j < n; ++j) {
      const double r = grid.r[j];
      t.a[j] = r;
      t.da[j] = 1.0;
      t.dda[j] = 0.0;
      t.lap[j] = (d - 1) / r;
      t.bilap[j] = -c / (r * r * r);
    }
    return t;
  }

  if (w.kind == VirialWeight::Kind::custom) {
    if (w.truncation != VirialWeight::Truncation::none)
      throw ParameterError("virial weight: custom profiles cannot be truncated");
    const bool has_four = bool(w.f3) && bool(w.f4);
    if (!has_four) t.bilap.resize(0);
    for (int j = 0; j < n; ++j) {
      const double r = grid.r[j];
      t.a[j] = w.f0(r);
      t.da[j] = w.f1(r);
      t.dda[j] = w.f2(r);
      t.lap[j] = generic_lap(r, t.da[j], t.dda[j]);
      if (has_four) t.bilap[j] = generic_bilap(r, t.da[j], t.dda[j], w.f3(r), w.f4(r));
    }
    return t;
  }

  const bool truncated = w.truncation == VirialWeight::Truncation::convex_linear;
  if (truncated && (!(w.R > 0.0) || w.R >= 0.5 * grid.r_max))
    throw ParameterError("virial weight: truncation radius must lie in (0, r_max/2)");
  const double R = truncated ? w.R : grid.r_max;  // base profile everywhere if untruncated
  const BaseProfile base = base_profile(w.kind, R, d);
  const Poly A2 = base.a2_blend;            // a''(R(1+x)) on the blend
  const Poly A2x = A2.derivative();
  const Poly A2xx = A2x.derivative();
  const Poly A1 = A2.antiderivative().scaled(R).plus_constant(base.a1(R));  // a'(R(1+x))
  const Poly A0 = A1.antiderivative().scaled(R).plus_constant(base.a(R));   // a(R(1+x))
  const double slope = A1(1.0);
  const double a_2R = A0(1.0);

  for (int j = 0; j < n; ++j) {
    const double r = grid.r[j];
    if (!truncated || r <= R) {
      t.a[j] = base.a(r);
      t.da[j] = base.a1(r);
      t.dda[j] = base.a2(r);
      t.lap[j] = base.lap(r);
      t.bilap[j] = base.bilap(r);
    } else if (r < 2.0 * R) {
      const double x = (r - R) / R;
      t.a[j] = A0(x);
      t.da[j] = A1(x);
      t.dda[j] = A2(x);
      t.lap[j] = generic_lap(r, t.da[j], t.dda[j]);
      t.bilap[j] = generic_bilap(r, t.da[j], t.dda[j], A2x(x) / R, A2xx(x) / (R * R));
    } else {
      t.a[j] = a_2R + slope * (r - 2.0 * R);
      t.da[j] = slope;
      t.dda[j] = 0.0;
      t.lap[j] = (d - 1) * slope / r;
      t.bilap[j] = -c * slope / (r * r * r);
    }
  }
  return t;
}

double virial_flux(const RadialField& u, const WeightTables& t) {
  require_finite(u, "virial_flux");
  const RadialGrid& g = *u.grid;
  const VectorXcd ur = radial_derivative(g, u.values);
  double acc = 0.0;
  for (int j = 0; j < g.n; ++j)
    acc += g.quad_w[j] * t.da[j] * std::imag(std::conj(u.values[j]) * ur[j]);
  return acc;
}

double virial_flux(const RadialField& u, const VirialWeight& w) {
  return virial_flux(u, tabulate_weight(w, *u.grid));
}

VirialRhs virial_rhs(const RadialField& u, const WeightTables& t, const ModelParams& params) {
  require_finite(u, "virial_rhs");
  if (t.bilap.size() == 0)
    throw ParameterError("virial_rhs: weight does not supply third and fourth derivatives");
  const RadialGrid& g = *u.grid;
  const VectorXcd ur = radial_derivative(g, u.values);
  const double half_p1 = 0.5 * (params.p + 1.0);
  VirialRhs out;
  for (int j = 0; j < g.n; ++j) {
    const double w = g.quad_w[j];
    const double a2 = std::norm(u.values[j]);
    out.hessian += w * 2.0 * t.dda[j] * std::norm(ur[j]);
    out.pressure += w * std::pow(a2, half_p1) * t.lap[j];
    out.bilaplacian += w * a2 * t.bilap[j];
    if (!params.potential.is_zero())
      out.potential += w * t.da[j] * params.potential.derivative(g.r[j]) * a2;
  }
  out.pressure *= (params.p - 1.0) / (params.p + 1.0);
  out.bilaplacian *= -0.5;
  out.potential *= -1.0;
  return out;
}

VirialRhs virial_rhs(const RadialField& u, const VirialWeight& w, const ModelParams& params) {
  return virial_rhs(u, tabulate_weight(w, *u.grid), params);
}

HardyCheck hardy_check(const RadialField& f, double beta) {
  require_finite(f, "hardy_check");
  const RadialGrid& g = *f.grid;
  const VectorXcd fr = radial_derivative(g, f.values);
  const double c = 0.25 * (g.d + beta) * (g.d + beta);
  HardyCheck out;
  for (int j = 0; j < g.n; ++j) {
    const double rb = std::pow(g.r[j], beta);
    out.lhs += g.quad_w[j] * c * std::norm(f.values[j]) * rb;
    out.rhs += g.quad_w[j] * std::norm(fr[j]) * rb * g.r[j] * g.r[j];
  }
  return out;
}

double weighted_moment(const RadialField& u, int k) {
  require_finite(u, "weighted_moment");
  if (k < 0) throw ParameterError("weighted_moment: order must be >= 0");
  const RadialGrid& g = *u.grid;
  double acc = 0.0;
  for (int j = 0; j < g.n; ++j)
    acc += g.quad_w[j] * std::norm(u.values[j]) * std::pow(g.r[j], k);
  return acc;
}

double cauchy_schwarz_moment(const RadialField& u, int j) {
  require_finite(u, "cauchy_schwarz_moment");
  if (j < 0) throw ParameterError("cauchy_schwarz_moment: order must be >= 0");
  const RadialGrid& g = *u.grid;
  const VectorXcd ur = radial_derivative(g, u.values);
  double acc = 0.0;
  for (int i = 0; i < g.n; ++i)
    acc += g.quad_w[i] * std::abs(u.values[i]) * std::abs(ur[i]) * std::pow(g.r[i], j);
  return acc;
}

namespace {

// Tail integrals int_R^{r_max} h(r) dr of a non-negative nodal density h with
// h(r_max) := 0, by right-to-left trapezoid accumulation plus a linear
// partial-cell piece at R.  Monotone non-increasing in R by construction.
std::vector<double> tail_integrals(const RadialGrid& g, const VectorXd& h,
                                   const std::vector<double>& radii) {
  const int n = g.n;
  // cumulative trapezoid from node j to the Dirichlet wall
  std::vector<double> cum(n + 1, 0.0);
  cum[n - 1] = 0.5 * (h[n - 1] + 0.0) * (g.r_max - g.r[n - 1]);
  for (int j = n - 2; j >= 0; --j)
    cum[j] = cum[j + 1] + 0.5 * (h[j] + h[j + 1]) * g.dr;
  std::vector<double> out;
  out.reserve(radii.size());
  for (double R : radii) {
    const int j = std::max(0, int(std::ceil(R / g.dr)) - 1);  // first node with r_j >= R
    if (j >= n) {  // R beyond the last node: linear decay of h toward the wall
      const double hR = h[n - 1] * (g.r_max - R) / (g.r_max - g.r[n - 1]);
      out.push_back(0.5 * hR * (g.r_max - R));
      continue;
    }
    // interpolate the density at R inside the straddled cell (h(0) = 0)
    const double rl = (j == 0) ? 0.0 : g.r[j - 1];
    const double hl = (j == 0) ? 0.0 : h[j - 1];
    const double s = (g.r[j] - R) / (g.r[j] - rl);
    const double hR = h[j] * (1.0 - s) + hl * s;
    out.push_back(cum[j] + 0.5 * (hR + h[j]) * (g.r[j] - R));
  }
  return out;
}

}  // namespace

TailProfile tail_profile(const RadialField& u, const std::vector<double>& radii) {
  require_finite(u, "tail_profile");
  const RadialGrid& g = *u.grid;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !(radii[i] < g.r_max))
      throw ParameterError("tail_profile: radii must lie in (0, r_max)");
    if (i > 0 && radii[i] <= radii[i - 1])
      throw ParameterError("tail_profile: radii must be strictly increasing");
  }
  const double sigma = sphere_area(g.d);
  VectorXd hm(g.n), hg(g.n);
  const VectorXcd ur = radial_derivative(g, u.values);
  for (int j = 0; j < g.n; ++j) {
    const double w = sigma * std::pow(g.r[j], g.d - 1);
    hm[j] = w * std::norm(u.values[j]);
    hg[j] = w * std::norm(ur[j]);
  }
  TailProfile out;
  out.d = g.d;
  out.radii = radii;
  out.mass_tail = tail_integrals(g, hm, radii);
  out.grad_tail = tail_integrals(g, hg, radii);
  return out;
}

DecayLaw decay_exponent_fit(const TailProfile& profile) {
  std::vector<double> r, m;
  for (std::size_t i = 0; i < profile.radii.size(); ++i)
    if (profile.mass_tail[i] > 0.0) {
      r.push_back(profile.radii[i]);
      m.push_back(profile.mass_tail[i]);
    }
  if (r.size() < 4)
    throw DegenerateInputError("decay_exponent_fit: need at least 4 radii with positive tail");
  DecayLaw out;
  out.fit = fit_loglog(r, m);
  out.constant = std::exp(out.fit.intercept);
  out.max_ratio = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    out.max_ratio = std::max(out.max_ratio, std::pow(r[i], profile.d - 4) * m[i]);
  return out;
}

}  // namespace nlslab
