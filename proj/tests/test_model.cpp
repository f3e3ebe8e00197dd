#include <cmath>

#include "doctest.h"
#include "nlslab/model.hpp"
#include "oracles.hpp"

using namespace nlslab;

TEST_SUITE_BEGIN("model");

namespace {
bool strictly_valid(const ModelParams& m) { return m.validate().empty(); }
bool fatally_invalid(const ModelParams& m) {
  for (const auto& issue : m.validate())
    if (issue.fatal) return true;
  return false;
}
}  // namespace

TEST_CASE("exponent window at d=11 is (15/11, 13/9)") {
  ModelParams m;
  m.d = 11;
  CHECK(m.mass_critical_p() == doctest::Approx(15.0 / 11.0).epsilon(1e-15));
  CHECK(m.energy_critical_p() == doctest::Approx(13.0 / 9.0).epsilon(1e-15));

  m.p = 1.40;
  CHECK(strictly_valid(m));
  m.p = 1.37;
  CHECK(strictly_valid(m));
  m.p = 1.36;  // below mass-critical: flagged but usable
  CHECK(!strictly_valid(m));
  CHECK(!fatally_invalid(m));
  m.p = 1.45;  // above energy-critical: rejected
  CHECK(fatally_invalid(m));
  m.p = 3.0;
  CHECK(fatally_invalid(m));
}

TEST_CASE("dimension handling") {
  ModelParams m;
  m.p = 1.9;
  m.d = 4;
  CHECK(fatally_invalid(m));
  m.d = 5;  // warned (full theory needs d >= 11) but accepted
  m.p = 2.0;
  CHECK(!fatally_invalid(m));
  CHECK(!strictly_valid(m));
  CHECK_NOTHROW(m.require_valid());
  m.d = 11;
  m.p = 1.4;
  CHECK(strictly_valid(m));
  CHECK(m.require_valid().empty());
}

TEST_CASE("bump potential closed form") {
  const PotentialSpec bump = PotentialSpec::bump(-10.0, 2.0);
  CHECK(bump.value(0.0) == doctest::Approx(-10.0).epsilon(1e-15));
  CHECK(bump.value(2.5) == 0.0);
  CHECK(bump.value(2.0) == 0.0);
  // interior smooth positive profile scaled by v0
  CHECK(bump.value(1.0) == doctest::Approx(-10.0 * std::exp(1.0 - 1.0 / (1.0 - 0.25))).epsilon(1e-14));
  // derivative: zero at the center, zero outside, matches finite differences inside
  CHECK(bump.derivative(0.0) == 0.0);
  CHECK(bump.derivative(2.1) == 0.0);
  const double h = 1e-6;
  for (double r : {0.5, 1.0, 1.7}) {
    const double fd = (bump.value(r + h) - bump.value(r - h)) / (2.0 * h);
    CHECK(bump.derivative(r) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("eval_potential on a grid") {
  auto g = make_grid(5, 64, 8.0);
  const RadialField zero = eval_potential(PotentialSpec::none(), g);
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

  const RadialField well = eval_potential(PotentialSpec::bump(-10.0, 2.0), g);
  for (int j = 0; j < g->n; ++j) {
    if (g->r[j] >= 2.0) CHECK(well.values[j] == Complex(0.0, 0.0));
    if (g->r[j] < 2.0) CHECK(well.values[j].real() <= 0.0);
  }
  // sup norm is attained toward the origin and bounded by |v0|
  CHECK(well.values.cwiseAbs().maxCoeff() <= 10.0);
  CHECK(well.values.cwiseAbs().maxCoeff() ==
        doctest::Approx(10.0 * std::exp(1.0 - 1.0 / (1.0 - std::pow(g->r[0] / 2.0, 2))))
            .epsilon(1e-12));

  PotentialSpec bad = PotentialSpec::bump(-1.0, 0.0);
  CHECK_THROWS_AS(eval_potential(bad, g), ParameterError);
}

TEST_SUITE_END();
