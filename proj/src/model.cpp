#include "nlslab/model.hpp"

#include <cmath>
#include <sstream>

namespace nlslab {

double PotentialSpec::value(double r) const {
  if (is_zero()) return 0.0;
  const double s = r / r0;
  if (s >= 1.0) return 0.0;
  return v0 * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double PotentialSpec::derivative(double r) const {
  if (is_zero()) return 0.0;
  const double s = r / r0;
  if (s >= 1.0) return 0.0;
  const double t = 1.0 - s * s;
  return value(r) * (-2.0 * s / (r0 * t * t));
}

VectorXd eval_potential_real(const PotentialSpec& spec, const RadialGrid& grid) {
  if (spec.kind == PotentialSpec::Kind::bump && !(spec.r0 > 0.0))
    throw ParameterError("eval_potential: bump support radius must be positive");
  VectorXd v(grid.n);
  for (int j = 0; j < grid.n; ++j) v[j] = spec.value(grid.r[j]);
  return v;
}

RadialField eval_potential(const PotentialSpec& spec, GridPtr grid) {
  VectorXd v = eval_potential_real(spec, *grid);
  return {std::move(grid), v.cast<Complex>()};
}

std::vector<ModelIssue> ModelParams::validate() const {
  std::vector<ModelIssue> issues;
  std::ostringstream os;
  if (d < 5) {
    os << "dimension d = " << d << " is below the supported range d >= 5";
    issues.push_back({true, os.str()});
    return issues;
  }
  if (d < 11)
    issues.push_back({false, "dimension d = " + std::to_string(d) +
                                  " is below 11; large-data asymptotics are probed, not guaranteed"});
  if (!(p > 1.0) || !std::isfinite(p)) {
    issues.push_back({true, "exponent p must be a finite number > 1"});
    return issues;
  }
  std::ostringstream win;
  win.precision(10);
  win << "admissible window is (" << mass_critical_p() << ", " << energy_critical_p() << ")";
  if (p >= energy_critical_p()) {
    std::ostringstream e;
    e.precision(10);
    e << "exponent p = " << p << " is energy-critical or supercritical; " << win.str();
    issues.push_back({true, e.str()});
  } else if (p <= mass_critical_p()) {
    std::ostringstream e;
    e.precision(10);
    e << "exponent p = " << p << " is at or below the mass-critical exponent; " << win.str();
    issues.push_back({false, e.str()});
  }
  if (potential.kind == PotentialSpec::Kind::bump && !(potential.r0 > 0.0))
    issues.push_back({true, "bump potential needs a positive support radius"});
  return issues;
}

std::vector<std::string> ModelParams::require_valid() const {
  std::vector<std::string> warnings;
  std::string fatal;
  for (const auto& issue : validate()) {
    if (issue.fatal)
      fatal += (fatal.empty() ? "" : "; ") + issue.message;
    else
      warnings.push_back(issue.message);
  }
  if (!fatal.empty()) throw ParameterError("invalid model parameters: " + fatal);
  return warnings;
}

}  // namespace nlslab
