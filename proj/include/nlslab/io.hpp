#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlslab/scattering.hpp"

namespace nlslab {

enum class ExperimentKind { simulate, boundstate, branch, verify, probe_attractor, sweep };

std::string kind_name(ExperimentKind kind);
std::optional<ExperimentKind> kind_from_name(const std::string& name);

/// Fully parsed run description.  The experiment kind itself is chosen by the
/// CLI subcommand; the file only carries parameters.
struct ExperimentConfig {
  ModelParams model;
  int grid_n = 0;
  double grid_r_max = 0.0;
  StepperConfig stepper;

  // initial data: amplitude * exp(-((r-center)/width)^2) * exp(i k r),
  // symmetrized across r = 0 when center > 0; optionally on top of the
  // stationary state at frequency initial.add_boundstate_E
  double init_amplitude = 1.0;
  double init_width = 2.0;
  double init_center = 0.0;
  double init_wavenumber = 0.0;
  std::optional<double> init_add_boundstate_E;

  double bs_E = -1.0;
  std::string bs_method = "petviashvili";  // petviashvili | shooting | both
  double bs_tol = 1e-8;
  double bs_bracket_lo = 1e-3;
  double bs_bracket_hi = 0.0;  // 0: auto

  double branch_E_begin = 0.0;  // 0: auto (just above the linear eigenvalue)
  double branch_E_end = 0.0;
  int branch_steps = 8;
  double branch_tol = 1e-8;

  std::vector<double> sweep_amplitudes = {0.5, 1.0, 2.0, 4.0, 8.0};
  double sweep_tail_window = 5.0;

  double probe_tail_window = 5.0;
  std::string library_path;  // optional: reuse a saved attractor library

  bool verify_quick = false;
  std::uint64_t seed = 1;

  std::vector<std::pair<std::string, std::string>> echo;  // parsed key/value pairs
};

struct ConfigError {
  int line = 0;  // 0: whole-file issue
  std::string message;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  std::vector<std::string> warnings;

  bool ok() const { return config.has_value(); }
  std::string error_text() const;
};

/// Parse the flat `section.key = value` format, collecting every error.
ParseResult parse_config(const std::string& text);
ParseResult parse_config_file(const std::string& path);

/// Build initial data described by a config (may solve for a stationary
/// state when initial.add_boundstate_E is set).
RadialField build_initial_data(const ExperimentConfig& cfg, GridPtr grid,
                               const LinearSpectrum* with_potential);

struct FileRecord {
  std::string name;  // relative to the output directory
  std::uint64_t bytes = 0;
  std::string hash;  // FNV-1a 64 of the contents, hex
};

struct RunManifest {
  std::string kind;
  std::string version;
  std::string started_at;
  std::string finished_at;
  bool passed = true;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::string grid_checksum;
  std::string operator_checksum;
  std::vector<FileRecord> files;
  std::vector<std::string> notes;
};

/// Run one experiment, writing outputs, plot scripts and manifest.json under
/// out_dir.  Validation happens before anything is created on disk.
RunManifest run_experiment(const ExperimentConfig& cfg, ExperimentKind kind,
                           const std::string& out_dir);

/// Write gnuplot scripts for every tabular output named in the manifest.
/// Throws ConsistencyError when a referenced file is missing.
std::vector<std::string> emit_plots(const RunManifest& manifest, const std::string& out_dir);

/// Re-scan an output directory and compare against its manifest.
bool manifest_matches_directory(const std::string& out_dir);

// --- serialization -------------------------------------------------------

void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

void save_library(const AttractorLibrary& lib, const std::string& dir);
AttractorLibrary load_library(const std::string& dir);

/// 17-significant-digit decimal rendering; round-trips doubles exactly.
std::string format_double(double x);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string hash_file(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace nlslab
