#include "nlslab/scattering.hpp"

#include <cmath>

#include "nlslab/parallel.hpp"

namespace nlslab {

ScatteringRecord extract_scattering_state(const Trajectory& traj, const LinearSpectrum& free_spec,
                                          const std::vector<double>& times) {
  if (free_spec.has_potential)
    throw ParameterError("extract_scattering_state: needs a potential-free spectrum");
  if (!free_spec.grid->same_as(*traj.grid))
    throw ParameterError("extract_scattering_state: spectrum grid does not match the trajectory");
  if (times.empty()) throw ParameterError("extract_scattering_state: no times requested");

  ScatteringRecord rec;
  rec.sponge_flagged = traj.config.sponge.has_value();
  for (double t : times) {
    const int k = traj.index_of_time(t);
    RadialField w = free_propagate(free_spec, traj.field(k), -t);
    rec.times.push_back(t);
    rec.candidates.push_back(std::move(w.values));
  }
  const int m = int(rec.times.size());
  rec.defects = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double dij = h1_norm({traj.grid, rec.candidates[i] - rec.candidates[j]});
      rec.defects(i, j) = dij;
      rec.defects(j, i) = dij;
    }
  rec.u_plus = {traj.grid, rec.candidates.back()};
  return rec;
}

AttractorLibrary make_library(const ModelParams& params, GridPtr grid,
                              const std::vector<BoundState>& states, std::string provenance) {
  AttractorLibrary lib;
  lib.params = params;
  lib.grid = std::move(grid);
  lib.provenance = std::move(provenance);
  for (const BoundState& bs : states) {
    if (!bs.profile.grid->same_as(*lib.grid))
      throw ParameterError("make_library: states must share one grid");
    lib.states.push_back(bs);
  }
  return lib;
}

AttractorLibrary make_library(const ModelParams& params, GridPtr grid, const Branch& branch,
                              std::string provenance) {
  std::vector<BoundState> states;
  for (const BranchPoint& pt : branch.points) states.push_back(pt.state);
  return make_library(params, std::move(grid), states, std::move(provenance));
}

AttractorDistance attractor_distance(const RadialField& v, const AttractorLibrary& lib) {
  if (!v.grid->same_as(*lib.grid))
    throw ParameterError("attractor_distance: field lives on a different grid");
  require_finite(v, "attractor_distance");

  const double vnorm2 = [&] {
    const double h = h1_norm(v);
    return h * h;
  }();

  AttractorDistance best;
  best.distance = std::sqrt(vnorm2);  // zero profile
  best.index = -1;
  best.phase = 0.0;
  for (int i = 0; i < int(lib.states.size()); ++i) {
    const RadialField& q = lib.states[i].profile;
    const Complex inner = h1_inner(v, q);
    const double qn = h1_norm(q);
    const double d2 = vnorm2 + qn * qn - 2.0 * std::abs(inner);
    const double dist = std::sqrt(std::max(0.0, d2));
    if (dist < best.distance) {
      best.distance = dist;
      best.index = i;
      best.phase = std::arg(inner);
    }
  }
  return best;
}

ResolutionReport resolution_report(const Trajectory& traj, const LinearSpectrum& free_spec,
                                   const AttractorLibrary& lib, double t_tail_window) {
  if (traj.size() < 2) throw ParameterError("resolution_report: need at least 2 snapshots");
  const double t_end = traj.times.back();
  std::vector<double> window_times;
  for (double t : traj.times)
    if (t >= t_end - t_tail_window) window_times.push_back(t);
  if (window_times.size() < 2)
    throw ParameterError("resolution_report: tail window contains fewer than 2 snapshots");

  ScatteringRecord rec = extract_scattering_state(traj, free_spec, {t_end});

  ResolutionReport rep;
  rep.u_plus = rec.u_plus;
  rep.sponge_flagged = rec.sponge_flagged;
  for (double t : window_times) {
    const int k = traj.index_of_time(t);
    RadialField radiation = free_propagate(free_spec, rep.u_plus, t);
    RadialField v{traj.grid, traj.snapshots[k] - radiation.values};
    rep.times.push_back(t);
    rep.remainder_h1.push_back(h1_norm(v));
    rep.attractor_dist.push_back(attractor_distance(v, lib).distance);
  }
  rep.final_remainder = rep.remainder_h1.back();
  rep.final_distance = rep.attractor_dist.back();

  // settled: less than 5% relative motion over the last quarter of the window
  const std::size_t q0 = rep.times.size() - std::max<std::size_t>(2, rep.times.size() / 4);
  double lo = rep.remainder_h1[q0], hi = rep.remainder_h1[q0];
  for (std::size_t i = q0; i < rep.remainder_h1.size(); ++i) {
    lo = std::min(lo, rep.remainder_h1[i]);
    hi = std::max(hi, rep.remainder_h1[i]);
  }
  rep.settled = (hi - lo) <= 0.05 * std::max(rep.final_remainder, 1e-12);
  return rep;
}

SweepTable amplitude_sweep(const ModelParams& params, const LinearSpectrum& evolve_spec,
                           const LinearSpectrum& free_spec, const AttractorLibrary& lib,
                           const RadialField& profile, const std::vector<double>& amplitudes,
                           const StepperConfig& config, double t_tail_window,
                           const std::function<void(int, const Trajectory&)>& on_trajectory) {
  for (std::size_t i = 1; i < amplitudes.size(); ++i)
    if (amplitudes[i] <= amplitudes[i - 1])
      throw ParameterError("amplitude_sweep: amplitudes must be strictly increasing");
  require_finite(profile, "amplitude_sweep");

  SweepTable table;
  table.rows.resize(amplitudes.size());
  table.reports.resize(amplitudes.size());

  const int workers = worker_count();
  const int run_workers = (workers >= 4) ? workers : 1;  // otherwise thread the transforms
  parallel_jobs(int(amplitudes.size()), run_workers, [&](int i) {
    ThreadCapGuard cap(run_workers > 1 ? 1 : 0);
    const double A = amplitudes[i];
    RadialField u0{profile.grid, A * profile.values};
    SweepRow row;
    row.amplitude = A;
    row.h1_initial = h1_norm(u0);
    if (A == 0.0) {
      row.settled = true;
      table.rows[i] = row;
      return;
    }
    Trajectory traj = evolve(u0, params, config, evolve_spec);
    if (on_trajectory) on_trajectory(i, traj);
    ResolutionReport rep = resolution_report(traj, free_spec, lib, t_tail_window);
    row.h1_remainder_final = rep.final_remainder;
    row.attractor_distance_final = rep.final_distance;
    row.settled = rep.settled;
    table.rows[i] = row;
    table.reports[i] = std::move(rep);
  });
  return table;
}

}  // namespace nlslab
