// Command-line driver: radial defocusing NLS laboratory.

#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "nlslab/io.hpp"
#include "nlslab/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nlslab: spherically symmetric defocusing NLS laboratory"};
  app.set_version_flag("--version", nlslab::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool quick = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "path to the run configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
  };

  CLI::App* simulate = app.add_subcommand("simulate", "evolve initial data and record diagnostics");
  CLI::App* boundstate = app.add_subcommand("boundstate", "compute a stationary profile");
  CLI::App* branch = app.add_subcommand("branch", "continue the stationary branch and save a library");
  CLI::App* verify = app.add_subcommand("verify", "run the verification battery");
  CLI::App* probe = app.add_subcommand("probe-attractor", "resolve a run against the state library");
  CLI::App* sweep = app.add_subcommand("sweep", "amplitude sweep of the remainder saturation");
  for (CLI::App* sub : {simulate, boundstate, branch, verify, probe, sweep}) add_common(sub);
  verify->add_flag("--quick", quick, "reduced resolutions (smoke pass)");

  CLI11_PARSE(app, argc, argv);

  nlslab::ExperimentKind kind = nlslab::ExperimentKind::simulate;
  if (boundstate->parsed()) kind = nlslab::ExperimentKind::boundstate;
  if (branch->parsed()) kind = nlslab::ExperimentKind::branch;
  if (verify->parsed()) kind = nlslab::ExperimentKind::verify;
  if (probe->parsed()) kind = nlslab::ExperimentKind::probe_attractor;
  if (sweep->parsed()) kind = nlslab::ExperimentKind::sweep;

  nlslab::ParseResult parsed;
  try {
    parsed = nlslab::parse_config_file(config_path);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  for (const std::string& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  if (!parsed.ok()) {
    std::cerr << parsed.error_text();
    std::cerr << "error: configuration rejected (" << parsed.errors.size() << " problem(s))\n";
    return 2;
  }
  nlslab::ExperimentConfig cfg = *parsed.config;
  if (quick) cfg.verify_quick = true;

  try {
    const nlslab::RunManifest manifest = nlslab::run_experiment(cfg, kind, out_dir);
    for (const std::string& note : manifest.notes) std::cout << "note: " << note << "\n";
    std::cout << (manifest.passed ? "OK" : "FAILED") << ": " << manifest.files.size()
              << " file(s) in " << out_dir << "\n";
    return manifest.passed ? 0 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
