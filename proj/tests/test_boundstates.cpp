#include <cmath>

#include "doctest.h"
#include "nlslab/boundstates.hpp"
#include "nlslab/virial.hpp"
#include "oracles.hpp"

using namespace nlslab;

TEST_SUITE_BEGIN("boundstates");

namespace {

struct DeepWell {
  ModelParams m;
  GridPtr grid;
  LinearSpectrum spec;
  LinearGroundState lin;

  DeepWell(int n = 512, double r_max = 16.0) {
    m.d = 5;
    m.p = 1.6;
    m.potential = PotentialSpec::bump(-50.0, 2.0);
    grid = make_grid(5, n, r_max);
    spec = build_operator(grid, m.potential);
    lin = linear_ground_state(spec);
  }

  RadialField seed(double amp = 0.05) const {
    RadialField s = lin.mode;
    s.values *= amp;
    return s;
  }
};

double gauge_distance(const RadialField& u, const RadialField& q) {
  const Complex inner = h1_inner(u, q);
  const Complex phase = std::polar(1.0, std::arg(inner));
  return h1_norm({u.grid, u.values - phase * q.values});
}

}  // namespace

TEST_CASE("linear ground state: sign of the eigenvalue and eigen-residual") {
  auto g = make_grid(5, 256, 16.0);
  LinearSpectrum free_spec = build_operator(g);
  CHECK(free_spec.eigenvalues[0] > 0.0);  // no binding without a well

  DeepWell w(256);
  CHECK(w.lin.eigenvalue < 0.0);
  CHECK(w.lin.eigenvalue == doctest::Approx(oracle::kLambda1Deep256).epsilon(1e-9));
  CHECK(mass(w.lin.mode) == doctest::Approx(1.0).epsilon(1e-12));
  RadialField defect = apply_operator(w.spec, w.lin.mode);
  defect.values -= w.lin.eigenvalue * w.lin.mode.values;
  CHECK(h1_norm(defect) < 1e-8);
}

TEST_CASE("fixed-point solve: residual contract and validation") {
  DeepWell w;
  const double E = w.lin.eigenvalue + 2.0;
  BoundState q = petviashvili_solve(w.m, w.spec, E, w.seed(), 1e-8);
  CHECK(q.frequency == E);
  CHECK(q.residual <= 1e-8);
  CHECK(q.positive);
  CHECK(q.monotone_tail);
  CHECK(q.amplitude == doctest::Approx(q.profile.values[0].real()));
  // independent re-evaluation of the defect, stencil only
  CHECK(bound_state_residual(w.m, q.profile, E) <= 2e-8);

  CHECK_THROWS_AS(petviashvili_solve(w.m, w.spec, +1.0, w.seed()), ParameterError);
  CHECK_THROWS_AS(petviashvili_solve(w.m, w.spec, w.lin.eigenvalue, w.seed()), SingularityError);
  RadialField negative_seed = w.seed();
  negative_seed.values = -negative_seed.values;
  CHECK_THROWS_AS(petviashvili_solve(w.m, w.spec, E, negative_seed), ParameterError);
  CHECK_THROWS_AS(petviashvili_solve(w.m, w.spec, E, zero_field(w.grid)), ParameterError);
}

TEST_CASE("small-amplitude limit hugs the linear ground state") {
  DeepWell w;
  const double lam1 = w.lin.eigenvalue;
  const BoundState near = petviashvili_solve(w.m, w.spec, lam1 + 0.1, w.seed(0.01));
  const BoundState far = petviashvili_solve(w.m, w.spec, lam1 + 1.0, w.seed());
  CHECK(mass(near.profile) < mass(far.profile));

  RadialField qn = near.profile;
  qn.values /= h1_norm(qn);
  RadialField e1 = w.lin.mode;
  e1.values /= h1_norm(e1);
  CHECK(gauge_distance(qn, e1) < 0.05);
}

TEST_CASE("branch continuation: monotone mass, continuity, termination reporting") {
  DeepWell w;
  const double lam1 = w.lin.eigenvalue;
  Branch branch = continue_branch(w.m, w.spec, lam1 + 0.3, lam1 + 4.0, 8);
  REQUIRE(branch.failure_index == -1);
  REQUIRE(branch.points.size() == 8);
  for (std::size_t k = 1; k < branch.points.size(); ++k) {
    CHECK(branch.points[k].state_mass > branch.points[k - 1].state_mass);
    const double dist = h1_norm({w.grid, branch.points[k].state.profile.values -
                                             branch.points[k - 1].state.profile.values});
    CHECK(dist < h1_norm(branch.points[k].state.profile));  // no basin hopping
    CHECK(branch.points[k].state.positive);
  }
  for (const BranchPoint& pt : branch.points) CHECK(std::isfinite(pt.state_energy));

  CHECK(continue_branch(w.m, w.spec, lam1 + 0.3, lam1 + 1.0, 0).points.empty());

  auto free_grid = make_grid(5, 256, 16.0);
  LinearSpectrum free_spec = build_operator(free_grid);
  ModelParams free_m = w.m;
  free_m.potential = PotentialSpec::none();
  CHECK_THROWS_AS(continue_branch(free_m, free_spec, -1.0, -0.5, 4), ParameterError);
}

TEST_CASE("shot classification brackets the profile") {
  DeepWell w;
  const double E = w.lin.eigenvalue + 2.0;
  CHECK(classify_shot(w.m, *w.grid, E, 1e-3) == ShotClass::sign_flip);
  CHECK(classify_shot(w.m, *w.grid, E, 0.5) == ShotClass::sign_flip);
  CHECK(classify_shot(w.m, *w.grid, E, 80.0) == ShotClass::blow_up);
  CHECK_THROWS_AS(shoot_solve(w.m, w.grid, E, {1e-3, 0.5}), BracketError);
}

TEST_CASE("shooting and the fixed point agree on the same discrete state") {
  DeepWell w;
  const double E = w.lin.eigenvalue + 2.0;
  const BoundState pet = petviashvili_solve(w.m, w.spec, E, w.seed(), 1e-8);
  const BoundState shot = shoot_solve(w.m, w.grid, E, {0.5, 80.0}, 1e-8);
  CHECK(shot.residual <= 1e-8);
  const double rel =
      h1_norm({w.grid, pet.profile.values - shot.profile.values}) / h1_norm(pet.profile);
  CHECK(rel < 1e-5);
  CHECK(shot.amplitude == doctest::Approx(pet.amplitude).epsilon(1e-6));
}

TEST_CASE("stationarity: the evolved state stays on its gauge orbit") {
  DeepWell w(512, 16.0);
  const double E = w.lin.eigenvalue + 2.0;
  const BoundState q = petviashvili_solve(w.m, w.spec, E, w.seed(), 1e-8);

  StepperConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  cfg.record_every = 200;
  cfg.potential_in_linear = true;
  Trajectory traj = evolve(q.profile, w.m, cfg, w.spec);
  RadialField uT = traj.field(traj.size() - 1);
  CHECK(gauge_distance(uT, q.profile) / h1_norm(q.profile) < 1e-4);
  // the orbit phase advances as exp(-i E t)
  const double theta = std::arg(h1_inner(uT, q.profile));
  const double expected = std::remainder(-E * cfg.t_end, 2.0 * M_PI);
  CHECK(std::remainder(theta - expected, 2.0 * M_PI) == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("single step of the full flow rotates the state at third-order accuracy") {
  DeepWell w;
  const double E = w.lin.eigenvalue + 2.0;
  const BoundState q = petviashvili_solve(w.m, w.spec, E, w.seed(), 1e-8);
  const auto local_error = [&](double dt) {
    RadialField stepped = strang_step(q.profile, dt, w.m, w.spec);
    const Complex rot = std::polar(1.0, -E * dt);
    return h1_norm({w.grid, stepped.values - rot * q.profile.values});
  };
  const double e1 = local_error(0.02);
  const double e2 = local_error(0.01);
  CHECK(e1 / e2 > 5.5);
  CHECK(e1 / e2 < 11.0);
}

TEST_CASE("stationary trajectory: flux and production terms vanish together") {
  DeepWell w(512, 16.0);
  const double E = w.lin.eigenvalue + 2.0;
  const BoundState q = petviashvili_solve(w.m, w.spec, E, w.seed(), 1e-8);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  cfg.record_every = 20;
  cfg.potential_in_linear = true;
  Trajectory traj = evolve(q.profile, w.m, cfg, w.spec);
  const VirialReport rep = virial_identity_check(traj, VirialWeight::quadratic_truncated(6.0));
  double scale = 0.0;
  for (int k = 0; k < traj.size(); ++k) scale = std::max(scale, std::abs(rep.hessian[k]));
  REQUIRE(scale > 0.0);
  for (int k = 0; k < traj.size(); ++k) {
    CHECK(std::abs(rep.flux[k]) < 1e-6 * scale);
    CHECK(std::abs(rep.rate[k]) < 1e-5 * scale);
    const double rhs = rep.hessian[k] + rep.pressure[k] + rep.bilaplacian[k] + rep.potential[k];
    CHECK(std::abs(rhs) < 2e-2 * scale);  // discrete stationary-state balance, O(dr^2)
  }
  CHECK(virial_primitive_check(traj, VirialWeight::quadratic_truncated(6.0)) < 1e-5 * scale);
}

TEST_CASE("tail-law report: computed states pass, slow synthetic tails fail") {
  DeepWell w(1024, 16.0);
  const double E = w.lin.eigenvalue + 2.0;
  const BoundState q = petviashvili_solve(w.m, w.spec, E, w.seed(), 1e-8);
  const TailBoundReport rep = tail_bound_check(q, w.m);
  CHECK(rep.mass_bounded);
  CHECK(rep.grad_bounded);
  CHECK(rep.pointwise_bounded);
  CHECK(std::isfinite(rep.sup_mass_ratio));
  CHECK(std::isfinite(rep.sup_grad_ratio));
  CHECK(std::isfinite(rep.pointwise_constant));
  // exponential tails decay much faster than any polynomial envelope
  CHECK(rep.pointwise_slope < -1.0);

  auto g = make_grid(5, 2048, 400.0);
  auto marginal = sample_field(g, [](double r) { return std::pow(1.0 + std::pow(r, 6), -0.5); });
  const TailBoundReport ok = tail_bound_check(marginal, 2.0);
  CHECK(ok.pointwise_bounded);  // exactly the r^{-(d-2)} envelope

  auto slow = sample_field(g, [](double r) { return std::pow(1.0 + std::pow(r, 4), -0.5); });
  const TailBoundReport bad = tail_bound_check(slow, 2.0);
  CHECK(!bad.pointwise_bounded);  // r^{-(d-3)} decays too slowly
  CHECK(bad.pointwise_slope == doctest::Approx(1.0).epsilon(0.1));

  BoundState fake = q;
  fake.residual = 1.0;
  CHECK_THROWS_AS(tail_bound_check(fake, w.m), ParameterError);
}

TEST_SUITE_END();
