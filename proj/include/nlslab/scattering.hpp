#pragma once

#include "nlslab/boundstates.hpp"
#include "nlslab/dynamics.hpp"

namespace nlslab {

/// Free-flow pullbacks w(T) = exp(-i T Lap) u(T) at selected times with their
/// pairwise H-defects; for scattering data the late-time defects shrink.
struct ScatteringRecord {
  std::vector<double> times;
  std::vector<VectorXcd> candidates;
  MatrixXd defects;   // defects(i,j) = || w(T_i) - w(T_j) ||_H
  RadialField u_plus; // latest candidate
  bool sponge_flagged = false;  // defects are lower bounds under a sponge
};

ScatteringRecord extract_scattering_state(const Trajectory& traj, const LinearSpectrum& free_spec,
                                          const std::vector<double>& times);

/// Candidate attractor: computed stationary states plus the zero profile.
struct AttractorLibrary {
  ModelParams params;
  GridPtr grid;
  std::vector<BoundState> states;
  std::string provenance;
};

AttractorLibrary make_library(const ModelParams& params, GridPtr grid,
                              const std::vector<BoundState>& states, std::string provenance);
AttractorLibrary make_library(const ModelParams& params, GridPtr grid, const Branch& branch,
                              std::string provenance);

/// Gauge-minimized H-distance to the library:
/// min over states Q and phases of || v - exp(i theta) Q ||_H, with the
/// optimal phase arg<v, Q>_H per state; index -1 selects the zero profile.
struct AttractorDistance {
  double distance = 0.0;
  int index = -1;
  double phase = 0.0;
};

AttractorDistance attractor_distance(const RadialField& v, const AttractorLibrary& lib);

/// Late-time resolution of a trajectory: pull the scattering candidate from
/// the trailing window, subtract its free flow, and track the remainder norm
/// and its distance to the library.
struct ResolutionReport {
  std::vector<double> times;
  std::vector<double> remainder_h1;
  std::vector<double> attractor_dist;
  RadialField u_plus;
  double final_remainder = 0.0;
  double final_distance = 0.0;
  bool settled = false;         // < 5% relative motion over the last quarter
  bool sponge_flagged = false;
};

ResolutionReport resolution_report(const Trajectory& traj, const LinearSpectrum& free_spec,
                                   const AttractorLibrary& lib, double t_tail_window);

/// Amplitude sweep: evolve A * g for each amplitude, resolve each run, and
/// tabulate how the final remainder grows with A.
struct SweepRow {
  double amplitude = 0.0;
  double h1_initial = 0.0;
  double h1_remainder_final = 0.0;
  double attractor_distance_final = 0.0;
  bool settled = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<ResolutionReport> reports;
};

SweepTable amplitude_sweep(const ModelParams& params, const LinearSpectrum& evolve_spec,
                           const LinearSpectrum& free_spec, const AttractorLibrary& lib,
                           const RadialField& profile, const std::vector<double>& amplitudes,
                           const StepperConfig& config, double t_tail_window,
                           const std::function<void(int, const Trajectory&)>& on_trajectory = {});

}  // namespace nlslab
