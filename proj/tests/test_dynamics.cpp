#include <cmath>

#include "doctest.h"
#include "nlslab/dynamics.hpp"
#include "nlslab/virial.hpp"
#include "oracles.hpp"

using namespace nlslab;

TEST_SUITE_BEGIN("dynamics");

namespace {

ModelParams free_model() {
  ModelParams m;
  m.d = 5;
  m.p = 1.6;
  return m;
}

RadialField gaussian(GridPtr g, double amp, double width) {
  return sample_field(g, [=](double r) { return amp * std::exp(-std::pow(r / width, 2)); });
}

}  // namespace

TEST_CASE("zero is a fixed point of the step") {
  auto g = make_grid(5, 128, 20.0);
  LinearSpectrum spec = build_operator(g);
  RadialField out = strang_step(zero_field(g), 1e-2, free_model(), spec);
  CHECK(out.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forced linear mode reproduces the free flow") {
  auto g = make_grid(5, 256, 30.0);
  LinearSpectrum spec = build_operator(g);
  RadialField u0 = gaussian(g, 0.8, 2.0);
  StepperConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  cfg.record_every = 100;
  cfg.force_linear = true;
  Trajectory traj = evolve(u0, free_model(), cfg, spec);
  RadialField exact = free_propagate(spec, u0, 1.0);
  CHECK(h1_norm({g, traj.snapshots.back() - exact.values}) < 1e-10 * h1_norm(u0));
}

TEST_CASE("t_end = 0 records a single snapshot") {
  auto g = make_grid(5, 128, 20.0);
  LinearSpectrum spec = build_operator(g);
  StepperConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.0;
  Trajectory traj = evolve(gaussian(g, 0.3, 2.0), free_model(), cfg, spec);
  CHECK(traj.size() == 1);
  CHECK(traj.times[0] == 0.0);
  CHECK_THROWS_AS(traj.index_of_time(0.5), ParameterError);
}

TEST_CASE("mass is conserved to roundoff, energy at second order") {
  auto g = make_grid(5, 512, 30.0);
  ModelParams m = free_model();
  m.potential = PotentialSpec::bump(-10.0, 2.0);
  LinearSpectrum spec = build_operator(g, m.potential);
  RadialField u0 = gaussian(g, 0.5, 2.0);

  const auto final_energy = [&](double dt) {
    StepperConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.record_every = std::max(1, int(std::lround(0.25 / dt)));
    cfg.potential_in_linear = true;
    Trajectory traj = evolve(u0, m, cfg, spec);
    ConservationReport rep = conservation_report(traj);
    CHECK(rep.max_mass_drift < 1e-12);
    return rep.energy_series.back();
  };
  // Richardson differences isolate the time-discretization error from the
  // dt-independent part of the measured energy functional.
  const double e1 = final_energy(4e-3);
  const double e2 = final_energy(2e-3);
  const double e3 = final_energy(1e-3);
  CHECK(std::abs(e1 - e2) / std::abs(e2 - e3) > 3.0);  // order-2 splitting
}

TEST_CASE("both potential routes agree at second order") {
  auto g = make_grid(5, 384, 30.0);
  ModelParams m = free_model();
  m.potential = PotentialSpec::bump(-10.0, 2.0);
  LinearSpectrum free_spec = build_operator(g);
  LinearSpectrum pot_spec = build_operator(g, m.potential);
  RadialField u0 = gaussian(g, 0.5, 2.0);

  const auto route_gap = [&](double dt) {
    StepperConfig phase_route;
    phase_route.dt = dt;
    phase_route.t_end = 0.5;
    phase_route.record_every = int(std::lround(0.5 / dt));
    StepperConfig linear_route = phase_route;
    linear_route.potential_in_linear = true;
    Trajectory a = evolve(u0, m, phase_route, free_spec);
    Trajectory b = evolve(u0, m, linear_route, pot_spec);
    return h1_norm({g, a.snapshots.back() - b.snapshots.back()});
  };
  const double g1 = route_gap(4e-3);
  const double g2 = route_gap(2e-3);
  CHECK(g1 / g2 > 3.0);
}

TEST_CASE("time reversal and gauge covariance") {
  auto g = make_grid(5, 384, 30.0);
  ModelParams m = free_model();
  LinearSpectrum spec = build_operator(g);
  RadialField u0 = gaussian(g, 0.4, 2.0);
  StepperConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 0.5;
  cfg.record_every = 250;

  // forward, conjugate, forward, conjugate returns the initial data; both
  // substeps are exactly reversible, so the defect is pure roundoff (well
  // inside the O(dt^2) budget)
  Trajectory fwd = evolve(u0, m, cfg, spec);
  RadialField half{g, fwd.snapshots.back().conjugate()};
  Trajectory bwd = evolve(half, m, cfg, spec);
  const double defect = h1_norm({g, bwd.snapshots.back().conjugate() - u0.values});
  CHECK(defect < 1e-10 * h1_norm(u0));

  // global phases commute with the flow to roundoff
  const Complex phase = std::polar(1.0, 1.1);
  RadialField rotated{g, phase * u0.values};
  Trajectory traj_rot = evolve(rotated, m, cfg, spec);
  CHECK(h1_norm({g, traj_rot.snapshots.back() - phase * fwd.snapshots.back()}) <
        1e-11 * h1_norm(u0));
}

TEST_CASE("integral-form defect: zero at t=0, roundoff in linear mode, order 2 when nonlinear") {
  auto g = make_grid(5, 384, 30.0);
  ModelParams m = free_model();
  LinearSpectrum spec = build_operator(g);
  RadialField u0 = gaussian(g, 0.5, 2.0);

  StepperConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 0.4;
  cfg.record_every = 2;
  cfg.force_linear = true;
  Trajectory lin = evolve(u0, m, cfg, spec);
  CHECK(duhamel_residual(lin, 0.0, spec) == 0.0);
  CHECK(duhamel_residual(lin, 0.4, spec) < 1e-10);

  cfg.force_linear = false;
  Trajectory a = evolve(u0, m, cfg, spec);
  const double r1 = duhamel_residual(a, 0.4, spec);
  cfg.dt = 1e-3;
  Trajectory b = evolve(u0, m, cfg, spec);
  const double r2 = duhamel_residual(b, 0.4, spec);
  CHECK(std::log2(r1 / r2) > 1.8);
  CHECK_THROWS_AS(duhamel_residual(a, 0.1234, spec), ParameterError);
}

TEST_CASE("sponge: identity at zero strength, interior untouched, mass non-increasing") {
  auto g = make_grid(5, 512, 40.0);
  SpongeSpec off{5.0, 0.0};
  RadialField interior = gaussian(g, 1.0, 2.0);
  RadialField same = sponge_apply(interior, off, 1e-2);
  CHECK((same.values - interior.values).cwiseAbs().maxCoeff() == 0.0);

  SpongeSpec sponge{5.0, 3.0};
  RadialField a = sponge_apply(interior, sponge, 1e-2);
  // untouched where the ramp vanishes (the far tail holds only denormal dust)
  CHECK((a.values - interior.values).cwiseAbs().maxCoeff() < 1e-100);

  RadialField outer =
      sample_field(g, [&](double r) { return std::exp(-std::pow((r - 38.0) / 1.5, 2)); });
  RadialField damped = sponge_apply(outer, sponge, 1e-2);
  CHECK(mass(damped) < mass(outer));

  CHECK_THROWS_AS(sponge_apply(interior, SpongeSpec{20.0, 1.0}, 1e-2), ParameterError);
  CHECK_THROWS_AS(sponge_apply(interior, SpongeSpec{5.0, -1.0}, 1e-2), ParameterError);
}

TEST_CASE("wall contact raises a warning") {
  auto g = make_grid(5, 256, 20.0);
  ModelParams m = free_model();
  LinearSpectrum spec = build_operator(g);
  // outgoing wavepacket aimed at the wall
  RadialField u0 = sample_field(g, [](double r) {
    return std::exp(-std::pow((r - 4.0) / 1.5, 2)) * std::polar(1.0, 3.0 * r);
  });
  StepperConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 3.0;
  cfg.record_every = 100;
  Trajectory traj = evolve(u0, m, cfg, spec);
  bool warned = false;
  for (const std::string& w : traj.warnings)
    if (w.find("wall contact") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("evolve validates its inputs") {
  auto g = make_grid(5, 256, 20.0);
  ModelParams m = free_model();
  LinearSpectrum spec = build_operator(g);
  StepperConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.1;

  RadialField bad = zero_field(g);
  bad.values[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(evolve(bad, m, cfg, spec), DataError);

  RadialField wall_hugger =
      sample_field(g, [](double r) { return std::exp(-std::pow(r - 18.0, 2)); });
  CHECK_THROWS_AS(evolve(wall_hugger, m, cfg, spec), ParameterError);

  cfg.t_end = 0.1234567;  // not a whole number of steps
  CHECK_THROWS_AS(evolve(gaussian(g, 0.1, 2.0), m, cfg, spec), ParameterError);

  cfg.t_end = 0.1;
  m.potential = PotentialSpec::bump(-5.0, 2.0);
  cfg.potential_in_linear = true;  // but the spectrum is potential-free
  CHECK_THROWS_AS(evolve(gaussian(g, 0.1, 2.0), m, cfg, spec), ParameterError);
}

TEST_SUITE_END();
