#include "nlslab/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nlslab/verify.hpp"
#include "nlslab/version.hpp"
#include "nlslab/virial.hpp"
#include "json.hpp"

namespace nlslab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::boundstate: return "boundstate";
    case ExperimentKind::branch: return "branch";
    case ExperimentKind::verify: return "verify";
    case ExperimentKind::probe_attractor: return "probe-attractor";
    case ExperimentKind::sweep: return "sweep";
  }
  return "unknown";
}

std::optional<ExperimentKind> kind_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::simulate, ExperimentKind::boundstate, ExperimentKind::branch,
        ExperimentKind::verify, ExperimentKind::probe_attractor, ExperimentKind::sweep})
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string now_iso() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write file: " + path);
  out << text;
}

}  // namespace

std::string hash_file(const std::string& path) {
  const std::string bytes = read_file(path);
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i)
    os << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
  write_file(path, os.str());
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

std::string ParseResult::error_text() const {
  std::ostringstream os;
  for (const auto& e : errors) {
    if (e.line > 0)
      os << "line " << e.line << ": ";
    os << e.message << "\n";
  }
  return os.str();
}

namespace {

struct RawValue {
  std::string text;
  int line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, RawValue> kv, std::vector<ConfigError>& errors)
      : kv_(std::move(kv)), errors_(&errors) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  int line_of(const std::string& key) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? 0 : it->second.line;
  }

  std::optional<std::string> get_string(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second.text;
  }

  std::optional<double> get_double(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second.text, &pos);
      if (pos != it->second.text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      errors_->push_back({it->second.line, key + ": expected a number, got '" + it->second.text + "'"});
      return std::nullopt;
    }
  }

  std::optional<int> get_int(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second.text, &pos);
      if (pos != it->second.text.size()) throw std::invalid_argument("trailing characters");
      return int(v);
    } catch (const std::exception&) {
      errors_->push_back({it->second.line, key + ": expected an integer, got '" + it->second.text + "'"});
      return std::nullopt;
    }
  }

  std::optional<bool> get_bool(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    const std::string& t = it->second.text;
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    errors_->push_back({it->second.line, key + ": expected a boolean, got '" + t + "'"});
    return std::nullopt;
  }

  std::optional<std::vector<double>> get_list(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    std::vector<double> out;
    std::stringstream ss(it->second.text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        errors_->push_back({it->second.line, key + ": expected a comma-separated list of numbers"});
        return std::nullopt;
      }
    }
    if (out.empty()) {
      errors_->push_back({it->second.line, key + ": empty list"});
      return std::nullopt;
    }
    return out;
  }

  void report_unknown() {
    for (const auto& [key, raw] : kv_)
      if (!consumed_.count(key)) errors_->push_back({raw.line, "unknown key '" + key + "'"});
  }

  const std::map<std::string, RawValue>& raw() const { return kv_; }

 private:
  std::map<std::string, RawValue> kv_;
  std::set<std::string> consumed_;
  std::vector<ConfigError>* errors_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ParseResult parse_config(const std::string& text) {
  ParseResult result;
  std::map<std::string, RawValue> kv;

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      result.errors.push_back({lineno, "expected 'section.key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string::npos) {
      result.errors.push_back({lineno, "keys must look like 'section.key'"});
      continue;
    }
    if (kv.count(key)) {
      result.errors.push_back({lineno, "duplicate key '" + key + "'"});
      continue;
    }
    kv[key] = {value, lineno};
  }

  for (const char* req :
       {"model.d", "model.p", "grid.n", "grid.r_max", "stepper.dt", "stepper.t_end"})
    if (!kv.count(req)) result.errors.push_back({0, std::string("missing required key '") + req + "'"});

  Reader rd(std::move(kv), result.errors);
  ExperimentConfig cfg;
  for (const auto& [key, raw] : rd.raw()) cfg.echo.emplace_back(key, raw.text);

  if (auto v = rd.get_int("model.d")) cfg.model.d = *v;
  if (auto v = rd.get_double("model.p")) cfg.model.p = *v;
  if (auto v = rd.get_string("model.potential")) {
    if (*v == "zero")
      cfg.model.potential = PotentialSpec::none();
    else if (*v == "bump")
      cfg.model.potential.kind = PotentialSpec::Kind::bump;
    else
      result.errors.push_back({rd.line_of("model.potential"),
                               "model.potential: expected 'zero' or 'bump', got '" + *v + "'"});
  }
  if (auto v = rd.get_double("model.v0")) cfg.model.potential.v0 = *v;
  if (auto v = rd.get_double("model.r0")) cfg.model.potential.r0 = *v;

  if (auto v = rd.get_int("grid.n")) cfg.grid_n = *v;
  if (auto v = rd.get_double("grid.r_max")) cfg.grid_r_max = *v;

  if (auto v = rd.get_double("stepper.dt")) cfg.stepper.dt = *v;
  if (auto v = rd.get_double("stepper.t_end")) cfg.stepper.t_end = *v;
  if (auto v = rd.get_int("stepper.record_every")) cfg.stepper.record_every = *v;
  if (auto v = rd.get_bool("stepper.potential_in_linear")) cfg.stepper.potential_in_linear = *v;
  if (auto v = rd.get_bool("stepper.force_linear")) cfg.stepper.force_linear = *v;
  double sponge_width = 0.0, sponge_strength = 0.0;
  if (auto v = rd.get_double("stepper.sponge_width")) sponge_width = *v;
  if (auto v = rd.get_double("stepper.sponge_strength")) sponge_strength = *v;
  if (sponge_width > 0.0) cfg.stepper.sponge = SpongeSpec{sponge_width, sponge_strength};

  if (auto v = rd.get_double("initial.amplitude")) cfg.init_amplitude = *v;
  if (auto v = rd.get_double("initial.width")) cfg.init_width = *v;
  if (auto v = rd.get_double("initial.center")) cfg.init_center = *v;
  if (auto v = rd.get_double("initial.wavenumber")) cfg.init_wavenumber = *v;
  if (auto v = rd.get_double("initial.add_boundstate_E")) cfg.init_add_boundstate_E = *v;

  if (auto v = rd.get_double("boundstate.E")) cfg.bs_E = *v;
  if (auto v = rd.get_string("boundstate.method")) cfg.bs_method = *v;
  if (auto v = rd.get_double("boundstate.tol")) cfg.bs_tol = *v;
  if (auto v = rd.get_double("boundstate.bracket_lo")) cfg.bs_bracket_lo = *v;
  if (auto v = rd.get_double("boundstate.bracket_hi")) cfg.bs_bracket_hi = *v;

  if (auto v = rd.get_double("branch.E_begin")) cfg.branch_E_begin = *v;
  if (auto v = rd.get_double("branch.E_end")) cfg.branch_E_end = *v;
  if (auto v = rd.get_int("branch.steps")) cfg.branch_steps = *v;
  if (auto v = rd.get_double("branch.tol")) cfg.branch_tol = *v;

  if (auto v = rd.get_list("sweep.amplitudes")) cfg.sweep_amplitudes = *v;
  if (auto v = rd.get_double("sweep.tail_window")) cfg.sweep_tail_window = *v;

  if (auto v = rd.get_double("probe.tail_window")) cfg.probe_tail_window = *v;
  if (auto v = rd.get_string("probe.library")) cfg.library_path = *v;

  if (auto v = rd.get_bool("verify.quick")) cfg.verify_quick = *v;
  if (auto v = rd.get_int("output.seed")) cfg.seed = std::uint64_t(*v);

  rd.report_unknown();

  // constraint validation, every violation with its source line
  for (const ModelIssue& issue : cfg.model.validate()) {
    if (issue.fatal) {
      const std::string key = issue.message.find("dimension") != std::string::npos ? "model.d"
                              : issue.message.find("exponent") != std::string::npos ? "model.p"
                                                                                    : "model.r0";
      result.errors.push_back({rd.line_of(key), issue.message});
    } else {
      result.warnings.push_back(issue.message);
    }
  }
  if (rd.has("grid.n") && cfg.grid_n < 16)
    result.errors.push_back({rd.line_of("grid.n"), "grid.n: need at least 16 nodes"});
  if (rd.has("grid.r_max") && !(cfg.grid_r_max > 0.0))
    result.errors.push_back({rd.line_of("grid.r_max"), "grid.r_max: must be positive"});
  if (rd.has("stepper.dt") && !(cfg.stepper.dt > 0.0))
    result.errors.push_back({rd.line_of("stepper.dt"), "stepper.dt: must be positive"});
  if (rd.has("stepper.t_end") && cfg.stepper.t_end < 0.0)
    result.errors.push_back({rd.line_of("stepper.t_end"), "stepper.t_end: must be non-negative"});
  if (cfg.stepper.record_every < 1)
    result.errors.push_back({rd.line_of("stepper.record_every"), "stepper.record_every: must be >= 1"});
  if (cfg.stepper.sponge && cfg.grid_r_max > 0.0 &&
      !(cfg.stepper.sponge->width < 0.25 * cfg.grid_r_max))
    result.errors.push_back(
        {rd.line_of("stepper.sponge_width"), "stepper.sponge_width: must be below r_max/4"});
  if (cfg.stepper.sponge && cfg.stepper.sponge->strength < 0.0)
    result.errors.push_back(
        {rd.line_of("stepper.sponge_strength"), "stepper.sponge_strength: must be >= 0"});
  if (cfg.bs_method != "petviashvili" && cfg.bs_method != "shooting" && cfg.bs_method != "both")
    result.errors.push_back({rd.line_of("boundstate.method"),
                             "boundstate.method: expected petviashvili, shooting or both"});
  for (std::size_t i = 1; i < cfg.sweep_amplitudes.size(); ++i)
    if (cfg.sweep_amplitudes[i] <= cfg.sweep_amplitudes[i - 1]) {
      result.errors.push_back(
          {rd.line_of("sweep.amplitudes"), "sweep.amplitudes: must be strictly increasing"});
      break;
    }

  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

ParseResult parse_config_file(const std::string& path) { return parse_config(read_file(path)); }

RadialField build_initial_data(const ExperimentConfig& cfg, GridPtr grid,
                               const LinearSpectrum* with_potential) {
  RadialField u0 = zero_field(grid);
  const double A = cfg.init_amplitude, w = cfg.init_width, c = cfg.init_center,
               k = cfg.init_wavenumber;
  if (!(w > 0.0)) throw ParameterError("initial.width must be positive");
  for (int j = 0; j < grid->n; ++j) {
    const double r = grid->r[j];
    double env = std::exp(-std::pow((r - c) / w, 2));
    if (c > 0.0) env += std::exp(-std::pow((r + c) / w, 2));  // even extension
    u0.values[j] = A * env * std::polar(1.0, k * r);
  }
  if (cfg.init_add_boundstate_E) {
    if (!with_potential || !with_potential->has_potential)
      throw ParameterError("initial.add_boundstate_E needs a potential in the model");
    const LinearGroundState lin = linear_ground_state(*with_potential);
    RadialField seed = lin.mode;
    seed.values *= 0.05;
    const BoundState q =
        petviashvili_solve(cfg.model, *with_potential, *cfg.init_add_boundstate_E, seed);
    u0.values += q.profile.values;
  }
  return u0;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json model_to_json(const ModelParams& m) {
  json j;
  j["d"] = m.d;
  j["p"] = m.p;
  j["potential"]["kind"] = m.potential.kind == PotentialSpec::Kind::bump ? "bump" : "zero";
  j["potential"]["v0"] = m.potential.v0;
  j["potential"]["r0"] = m.potential.r0;
  return j;
}

ModelParams model_from_json(const json& j) {
  ModelParams m;
  m.d = j.at("d").get<int>();
  m.p = j.at("p").get<double>();
  const std::string kind = j.at("potential").at("kind").get<std::string>();
  m.potential.kind = kind == "bump" ? PotentialSpec::Kind::bump : PotentialSpec::Kind::zero;
  m.potential.v0 = j.at("potential").at("v0").get<double>();
  m.potential.r0 = j.at("potential").at("r0").get<double>();
  return m;
}

json grid_to_json(const RadialGrid& g) {
  json j;
  j["d"] = g.d;
  j["n"] = g.n;
  j["r_max"] = g.r_max;
  return j;
}

GridPtr grid_from_json(const json& j) {
  return make_grid(j.at("d").get<int>(), j.at("n").get<int>(), j.at("r_max").get<double>());
}

json stepper_to_json(const StepperConfig& c) {
  json j;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["record_every"] = c.record_every;
  j["potential_in_linear"] = c.potential_in_linear;
  j["force_linear"] = c.force_linear;
  if (c.sponge) {
    j["sponge"]["width"] = c.sponge->width;
    j["sponge"]["strength"] = c.sponge->strength;
  } else {
    j["sponge"] = nullptr;
  }
  return j;
}

StepperConfig stepper_from_json(const json& j) {
  StepperConfig c;
  c.dt = j.at("dt").get<double>();
  c.t_end = j.at("t_end").get<double>();
  c.record_every = j.at("record_every").get<int>();
  c.potential_in_linear = j.at("potential_in_linear").get<bool>();
  c.force_linear = j.at("force_linear").get<bool>();
  if (!j.at("sponge").is_null())
    c.sponge = SpongeSpec{j["sponge"].at("width").get<double>(),
                          j["sponge"].at("strength").get<double>()};
  return c;
}

}  // namespace

void save_trajectory(const Trajectory& traj, const std::string& path) {
  json header;
  header["format"] = "nlslab-trajectory-1";
  header["model"] = model_to_json(traj.params);
  header["grid"] = grid_to_json(*traj.grid);
  header["stepper"] = stepper_to_json(traj.config);
  header["warnings"] = traj.warnings;
  header["snapshots"] = traj.size();

  std::ostringstream os;
  os << header.dump() << "\n";
  os << "t";
  for (int j = 1; j <= traj.grid->n; ++j) os << ",re_" << j << ",im_" << j;
  os << "\n";
  for (int k = 0; k < traj.size(); ++k) {
    os << format_double(traj.times[k]);
    const VectorXcd& u = traj.snapshots[k];
    for (int j = 0; j < traj.grid->n; ++j)
      os << "," << format_double(u[j].real()) << "," << format_double(u[j].imag());
    os << "\n";
  }
  write_file(path, os.str());
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open trajectory file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("trajectory file is empty: " + path);
  const json header = json::parse(line);
  if (header.value("format", "") != "nlslab-trajectory-1")
    throw DataError("unrecognized trajectory format in " + path);

  Trajectory traj;
  traj.params = model_from_json(header.at("model"));
  traj.grid = grid_from_json(header.at("grid"));
  traj.config = stepper_from_json(header.at("stepper"));
  traj.warnings = header.at("warnings").get<std::vector<std::string>>();

  std::getline(in, line);  // column header
  const int n = traj.grid->n;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    traj.times.push_back(std::stod(cell));
    VectorXcd u(n);
    for (int j = 0; j < n; ++j) {
      std::getline(ss, cell, ',');
      const double re = std::stod(cell);
      std::getline(ss, cell, ',');
      const double im = std::stod(cell);
      u[j] = Complex(re, im);
    }
    traj.snapshots.push_back(std::move(u));
  }
  if (int(traj.times.size()) != header.at("snapshots").get<int>())
    throw DataError("trajectory file is truncated: " + path);
  return traj;
}

void save_library(const AttractorLibrary& lib, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["format"] = "nlslab-library-1";
  j["model"] = model_to_json(lib.params);
  j["grid"] = grid_to_json(*lib.grid);
  j["provenance"] = lib.provenance;
  j["states"] = json::array();
  for (std::size_t i = 0; i < lib.states.size(); ++i) {
    const BoundState& bs = lib.states[i];
    char name[32];
    std::snprintf(name, sizeof(name), "state_%03zu.csv", i);
    json s;
    s["frequency"] = bs.frequency;
    s["residual"] = bs.residual;
    s["tolerance"] = bs.tolerance;
    s["amplitude"] = bs.amplitude;
    s["positive"] = bs.positive;
    s["monotone_tail"] = bs.monotone_tail;
    s["mass"] = mass(bs.profile);
    s["energy"] = energy(bs.profile, lib.params);
    s["profile"] = name;
    j["states"].push_back(s);
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < lib.grid->n; ++k)
      rows.push_back({lib.grid->r[k], bs.profile.values[k].real()});
    write_csv((fs::path(dir) / name).string(), {"r", "q"}, rows);
  }
  write_file((fs::path(dir) / "library.json").string(), j.dump(2) + "\n");
}

AttractorLibrary load_library(const std::string& dir) {
  const json j = json::parse(read_file((fs::path(dir) / "library.json").string()));
  if (j.value("format", "") != "nlslab-library-1")
    throw DataError("unrecognized library format in " + dir);
  AttractorLibrary lib;
  lib.params = model_from_json(j.at("model"));
  lib.grid = grid_from_json(j.at("grid"));
  lib.provenance = j.value("provenance", "");
  for (const json& s : j.at("states")) {
    BoundState bs;
    bs.frequency = s.at("frequency").get<double>();
    bs.tolerance = s.at("tolerance").get<double>();
    bs.amplitude = s.at("amplitude").get<double>();
    bs.positive = s.at("positive").get<bool>();
    bs.monotone_tail = s.at("monotone_tail").get<bool>();
    const std::string file = (fs::path(dir) / s.at("profile").get<std::string>()).string();
    std::ifstream in(file);
    if (!in) throw DataError("library profile missing: " + file);
    std::string line;
    std::getline(in, line);  // header
    VectorXcd q(lib.grid->n);
    int k = 0;
    while (std::getline(in, line) && k < lib.grid->n) {
      const auto comma = line.find(',');
      q[k++] = Complex(std::stod(line.substr(comma + 1)), 0.0);
    }
    if (k != lib.grid->n) throw DataError("library profile truncated: " + file);
    bs.profile = {lib.grid, std::move(q)};
    bs.residual = bound_state_residual(lib.params, bs.profile, bs.frequency);
    lib.states.push_back(std::move(bs));
  }
  return lib;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

struct OutputTracker {
  fs::path dir;
  RunManifest* manifest;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void add(const std::string& name) {
    FileRecord rec;
    rec.name = name;
    const std::string p = path(name);
    rec.bytes = fs::file_size(p);
    rec.hash = hash_file(p);
    manifest->files.push_back(rec);
  }
};

void write_conservation_csv(const OutputTracker& out, const Trajectory& traj) {
  const ConservationReport rep = conservation_report(traj);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    rows.push_back({rep.times[k], rep.mass_series[k], rep.energy_series[k]});
  write_csv(out.path("conservation.csv"), {"t", "mass", "energy"}, rows);
}

void write_virial_csv(const OutputTracker& out, const Trajectory& traj, const VirialWeight& w) {
  const VirialReport rep = virial_identity_check(traj, w);
  const ConservationReport cons = conservation_report(traj);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    rows.push_back({rep.times[k], cons.mass_series[k], cons.energy_series[k], rep.flux[k],
                    rep.hessian[k], rep.pressure[k], rep.bilaplacian[k], rep.potential[k],
                    rep.pointwise_residual[k]});
  write_csv(out.path("diagnostics.csv"),
            {"t", "mass", "energy", "flux", "rhs_hessian", "rhs_pressure", "rhs_bilap",
             "rhs_potential", "residual"},
            rows);
}

AttractorLibrary obtain_library(const ExperimentConfig& cfg, GridPtr grid,
                                const LinearSpectrum& with_potential) {
  if (!cfg.library_path.empty()) {
    AttractorLibrary lib = load_library(cfg.library_path);
    if (!lib.grid->same_as(*grid))
      throw ParameterError("loaded library grid does not match the run grid");
    return lib;
  }
  const double lam1 = with_potential.eigenvalues[0];
  if (lam1 >= 0.0)
    return make_library(cfg.model, grid, std::vector<BoundState>{}, "no binding well: zero state only");
  double e0 = cfg.branch_E_begin, e1 = cfg.branch_E_end;
  if (e0 == 0.0) e0 = lam1 + 0.04 * std::abs(lam1);
  if (e1 == 0.0) e1 = lam1 + 0.35 * std::abs(lam1);
  const Branch branch =
      continue_branch(cfg.model, with_potential, e0, e1, cfg.branch_steps, cfg.branch_tol);
  std::ostringstream prov;
  prov << "branch continuation, E in [" << e0 << ", " << e1 << "], " << branch.points.size()
       << " states";
  if (branch.failure_index >= 0) prov << " (terminated: " << branch.failure_reason << ")";
  return make_library(cfg.model, grid, branch, prov.str());
}

void run_simulate(const ExperimentConfig& cfg, OutputTracker& out) {
  GridPtr grid = make_grid(cfg.model.d, cfg.grid_n, cfg.grid_r_max);
  const bool v_in_linear = cfg.stepper.potential_in_linear && !cfg.model.potential.is_zero();
  LinearSpectrum spec = v_in_linear ? build_operator(grid, cfg.model.potential)
                                    : build_operator(grid);
  out.manifest->operator_checksum =
      hex64(fnv1a64(spec.eigenvalues.data(), sizeof(double) * spec.eigenvalues.size()));
  LinearSpectrum with_pot_storage;
  const LinearSpectrum* with_pot = nullptr;
  if (cfg.init_add_boundstate_E) {
    if (v_in_linear) {
      with_pot = &spec;
    } else {
      with_pot_storage = build_operator(grid, cfg.model.potential);
      with_pot = &with_pot_storage;
    }
  }
  const RadialField u0 = build_initial_data(cfg, grid, with_pot);
  const Trajectory traj = evolve(u0, cfg.model, cfg.stepper, spec);
  for (const std::string& w : traj.warnings) out.manifest->notes.push_back(w);

  save_trajectory(traj, out.path("trajectory.traj"));
  out.add("trajectory.traj");
  write_conservation_csv(out, traj);
  out.add("conservation.csv");
  if (traj.size() >= 3) {
    write_virial_csv(out, traj, VirialWeight::quadratic_truncated(cfg.grid_r_max / 3.0));
    out.add("diagnostics.csv");
  }
}

void run_boundstate(const ExperimentConfig& cfg, OutputTracker& out) {
  GridPtr grid = make_grid(cfg.model.d, cfg.grid_n, cfg.grid_r_max);
  if (cfg.model.potential.is_zero())
    throw ParameterError("boundstate: the model needs a binding potential");
  LinearSpectrum spec = build_operator(grid, cfg.model.potential);
  out.manifest->operator_checksum =
      hex64(fnv1a64(spec.eigenvalues.data(), sizeof(double) * spec.eigenvalues.size()));

  json summary;
  summary["E"] = cfg.bs_E;
  std::optional<BoundState> pet, shot;
  if (cfg.bs_method == "petviashvili" || cfg.bs_method == "both") {
    const LinearGroundState lin = linear_ground_state(spec);
    RadialField seed = lin.mode;
    seed.values *= 0.05;
    pet = petviashvili_solve(cfg.model, spec, cfg.bs_E, seed, cfg.bs_tol);
  }
  if (cfg.bs_method == "shooting" || cfg.bs_method == "both") {
    double hi = cfg.bs_bracket_hi;
    if (hi <= 0.0) {
      hi = pet ? 2.0 * pet->amplitude : 1.0;
      while (classify_shot(cfg.model, *grid, cfg.bs_E, hi) != ShotClass::blow_up && hi < 1e9)
        hi *= 4.0;
    }
    shot = shoot_solve(cfg.model, grid, cfg.bs_E, {cfg.bs_bracket_lo, hi}, cfg.bs_tol);
  }
  const auto emit = [&](const char* name, const BoundState& bs) {
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < grid->n; ++k) rows.push_back({grid->r[k], bs.profile.values[k].real()});
    const std::string file = std::string("profile_") + name + ".csv";
    write_csv(out.path(file), {"r", "q"}, rows);
    out.add(file);
    json s;
    s["frequency"] = bs.frequency;
    s["residual"] = bs.residual;
    s["amplitude"] = bs.amplitude;
    s["mass"] = mass(bs.profile);
    s["energy"] = energy(bs.profile, cfg.model);
    s["positive"] = bs.positive;
    s["monotone_tail"] = bs.monotone_tail;
    summary[name] = s;
  };
  if (pet) emit("petviashvili", *pet);
  if (shot) emit("shooting", *shot);
  if (pet && shot) {
    const double dist =
        h1_norm({grid, pet->profile.values - shot->profile.values}) / h1_norm(pet->profile);
    summary["cross_method_h1_distance_rel"] = dist;
  }
  write_file(out.path("boundstate.json"), summary.dump(2) + "\n");
  out.add("boundstate.json");
}

void run_branch(const ExperimentConfig& cfg, OutputTracker& out) {
  GridPtr grid = make_grid(cfg.model.d, cfg.grid_n, cfg.grid_r_max);
  if (cfg.model.potential.is_zero())
    throw ParameterError("branch: the model needs a binding potential");
  LinearSpectrum spec = build_operator(grid, cfg.model.potential);
  out.manifest->operator_checksum =
      hex64(fnv1a64(spec.eigenvalues.data(), sizeof(double) * spec.eigenvalues.size()));
  const AttractorLibrary lib = obtain_library(cfg, grid, spec);
  if (lib.states.empty()) out.manifest->notes.push_back("branch produced no states");
  save_library(lib, out.dir.string());
  out.add("library.json");
  for (std::size_t i = 0; i < lib.states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "state_%03zu.csv", i);
    out.add(name);
  }
}

void run_probe(const ExperimentConfig& cfg, OutputTracker& out) {
  GridPtr grid = make_grid(cfg.model.d, cfg.grid_n, cfg.grid_r_max);
  LinearSpectrum free_spec = build_operator(grid);
  LinearSpectrum pot_spec;
  const bool has_v = !cfg.model.potential.is_zero();
  if (has_v) pot_spec = build_operator(grid, cfg.model.potential);
  out.manifest->operator_checksum =
      hex64(fnv1a64(free_spec.eigenvalues.data(), sizeof(double) * free_spec.eigenvalues.size()));

  const LinearSpectrum& evolve_spec =
      (cfg.stepper.potential_in_linear && has_v) ? pot_spec : free_spec;
  const AttractorLibrary lib =
      obtain_library(cfg, grid, has_v ? pot_spec : free_spec);
  const RadialField u0 = build_initial_data(cfg, grid, has_v ? &pot_spec : nullptr);
  const Trajectory traj = evolve(u0, cfg.model, cfg.stepper, evolve_spec);
  for (const std::string& w : traj.warnings) out.manifest->notes.push_back(w);
  const ResolutionReport rep = resolution_report(traj, free_spec, lib, cfg.probe_tail_window);
  if (rep.sponge_flagged)
    out.manifest->notes.push_back("sponge active: extraction defects are lower bounds");
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    rows.push_back({rep.times[k], rep.remainder_h1[k], rep.attractor_dist[k]});
  write_csv(out.path("resolution.csv"), {"t", "remainder_h1", "attractor_distance"}, rows);
  out.add("resolution.csv");
  save_trajectory(traj, out.path("trajectory.traj"));
  out.add("trajectory.traj");
}

void run_sweep(const ExperimentConfig& cfg, OutputTracker& out) {
  GridPtr grid = make_grid(cfg.model.d, cfg.grid_n, cfg.grid_r_max);
  LinearSpectrum free_spec = build_operator(grid);
  LinearSpectrum pot_spec;
  const bool has_v = !cfg.model.potential.is_zero();
  if (has_v) pot_spec = build_operator(grid, cfg.model.potential);
  out.manifest->operator_checksum =
      hex64(fnv1a64(free_spec.eigenvalues.data(), sizeof(double) * free_spec.eigenvalues.size()));
  const LinearSpectrum& evolve_spec =
      (cfg.stepper.potential_in_linear && has_v) ? pot_spec : free_spec;
  const AttractorLibrary lib = obtain_library(cfg, grid, has_v ? pot_spec : free_spec);

  RadialField g = build_initial_data(cfg, grid, nullptr);
  std::vector<std::string> traj_files(cfg.sweep_amplitudes.size());
  const SweepTable table = amplitude_sweep(
      cfg.model, evolve_spec, free_spec, lib, g, cfg.sweep_amplitudes, cfg.stepper,
      cfg.sweep_tail_window, [&](int i, const Trajectory& traj) {
        char name[40];
        std::snprintf(name, sizeof(name), "trajectory_%02d.traj", i);
        save_trajectory(traj, out.path(name));
        traj_files[i] = name;
      });
  for (const std::string& f : traj_files)
    if (!f.empty()) out.add(f);
  std::vector<std::vector<double>> rows;
  for (const SweepRow& row : table.rows)
    rows.push_back({row.amplitude, row.h1_initial, row.h1_remainder_final,
                    row.attractor_distance_final, row.settled ? 1.0 : 0.0});
  write_csv(out.path("sweep.csv"),
            {"amplitude", "h1_initial", "h1_remainder_final", "attractor_distance_final",
             "settled_flag"},
            rows);
  out.add("sweep.csv");
  for (const SweepRow& row : table.rows)
    if (!row.settled) {
      std::ostringstream os;
      os << "run at amplitude " << row.amplitude << " did not settle";
      out.manifest->notes.push_back(os.str());
    }
}

void run_verify(const ExperimentConfig& cfg, OutputTracker& out) {
  BatteryOptions opts;
  opts.quick = cfg.verify_quick;
  opts.seed = cfg.seed;
  const std::vector<CriterionResult> results = run_acceptance_battery(opts);
  std::ostringstream os;
  os << "criterion,passed,seconds,detail\n";
  bool all = true;
  for (const CriterionResult& r : results) {
    all = all && r.passed;
    std::string detail = r.detail;
    for (char& c : detail)
      if (c == ',') c = ';';
    os << r.name << "," << (r.passed ? 1 : 0) << "," << format_double(r.seconds) << "," << detail
       << "\n";
  }
  write_file(out.path("verify_summary.csv"), os.str());
  out.add("verify_summary.csv");
  out.manifest->passed = all;
}

}  // namespace

std::vector<std::string> emit_plots(const RunManifest& manifest, const std::string& out_dir) {
  std::vector<std::string> scripts;
  int model_d = 0;
  for (const auto& [k, v] : manifest.config_echo)
    if (k == "model.d") model_d = std::atoi(v.c_str());

  for (const FileRecord& rec : manifest.files) {
    if (rec.name.size() < 4 || rec.name.substr(rec.name.size() - 4) != ".csv") continue;
    if (rec.name.substr(0, 6) == "state_") continue;  // library profiles: plotted via library.gp
    const fs::path csv = fs::path(out_dir) / rec.name;
    if (!fs::exists(csv))
      throw ConsistencyError("emit_plots: manifest references missing file " + rec.name);
    const std::string stem = fs::path(rec.name).stem().string();
    std::ostringstream os;
    os << "# gnuplot script for " << rec.name << "\n"
       << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set grid\n";
    if (stem == "conservation") {
      os << "set xlabel 't'\n"
         << "stats '" << rec.name << "' using 2 every ::0::0 nooutput\n"
         << "m0 = STATS_min\n"
         << "stats '" << rec.name << "' using 3 every ::0::0 nooutput\n"
         << "e0 = STATS_min\n"
         << "set ylabel 'relative drift'\n"
         << "set logscale y\n"
         << "plot '" << rec.name << "' using 1:(abs($2/m0-1)+1e-18) with lines title 'mass drift', \\\n"
         << "     '" << rec.name << "' using 1:(abs($3-e0)/(abs(e0)>1?abs(e0):1)+1e-18) with lines title 'energy drift'\n";
    } else if (stem == "diagnostics") {
      os << "set xlabel 't'\n"
         << "set ylabel 'flux-rate terms'\n"
         << "plot '" << rec.name << "' using 1:4 with lines title 'flux', \\\n"
         << "     '" << rec.name << "' using 1:($5+$6+$7+$8) with lines title 'production', \\\n"
         << "     '" << rec.name << "' using 1:9 with lines title 'residual'\n";
    } else if (stem.rfind("tail", 0) == 0) {
      os << "set xlabel 'R'\n"
         << "set ylabel 'tail mass'\n"
         << "set logscale xy\n"
         << "C = 1.0\n"
         << "ref(x) = C * x**(" << (4 - model_d) << ")\n"
         << "fit ref(x) '" << rec.name << "' using 1:2 via C\n"
         << "plot '" << rec.name << "' using 1:2 with points title 'tail mass', \\\n"
         << "     ref(x) with lines title 'R^{" << (4 - model_d) << "} guide'\n";
    } else if (stem == "sweep") {
      os << "set xlabel 'amplitude'\n"
         << "set ylabel 'H norm'\n"
         << "plot '" << rec.name << "' using 1:2 with linespoints title 'initial', \\\n"
         << "     '" << rec.name << "' using 1:3 with linespoints title 'final remainder'\n";
    } else if (stem == "resolution") {
      os << "set xlabel 't'\n"
         << "set ylabel 'H norm'\n"
         << "plot '" << rec.name << "' using 1:2 with lines title 'remainder', \\\n"
         << "     '" << rec.name << "' using 1:3 with lines title 'attractor distance'\n";
    } else {
      os << "set xlabel 'column 1'\n"
         << "plot '" << rec.name << "' using 1:2 with lines\n";
    }
    const std::string script = stem + ".gp";
    write_file((fs::path(out_dir) / script).string(), os.str());
    scripts.push_back(script);
  }
  return scripts;
}

namespace {

json manifest_to_json(const RunManifest& m) {
  json j;
  j["kind"] = m.kind;
  j["version"] = m.version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["passed"] = m.passed;
  j["grid_checksum"] = m.grid_checksum;
  j["operator_checksum"] = m.operator_checksum;
  j["config"] = json::object();
  for (const auto& [k, v] : m.config_echo) j["config"][k] = v;
  j["files"] = json::array();
  for (const FileRecord& f : m.files)
    j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"hash", f.hash}});
  j["notes"] = m.notes;
  return j;
}

}  // namespace

bool manifest_matches_directory(const std::string& out_dir) {
  const json j = json::parse(read_file((fs::path(out_dir) / "manifest.json").string()));
  std::set<std::string> listed;
  for (const json& f : j.at("files")) listed.insert(f.at("name").get<std::string>());
  std::set<std::string> present;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), out_dir).string();
    if (rel == "manifest.json") continue;
    present.insert(rel);
  }
  if (listed != present) return false;
  for (const json& f : j.at("files")) {
    const std::string p = (fs::path(out_dir) / f.at("name").get<std::string>()).string();
    if (hash_file(p) != f.at("hash").get<std::string>()) return false;
  }
  return true;
}

RunManifest run_experiment(const ExperimentConfig& cfg, ExperimentKind kind,
                           const std::string& out_dir) {
  // fail fast: every static validation error fires before the directory exists
  cfg.model.require_valid();
  if (cfg.grid_n < 16 || !(cfg.grid_r_max > 0.0))
    throw ParameterError("run_experiment: invalid grid parameters");
  if (!(cfg.stepper.dt > 0.0) || cfg.stepper.t_end < 0.0 || cfg.stepper.record_every < 1)
    throw ParameterError("run_experiment: invalid stepper parameters");

  RunManifest manifest;
  manifest.kind = kind_name(kind);
  manifest.version = kVersion;
  manifest.started_at = now_iso();
  manifest.config_echo = cfg.echo;
  {
    const double gbytes[3] = {double(cfg.model.d), double(cfg.grid_n), cfg.grid_r_max};
    manifest.grid_checksum = hex64(fnv1a64(gbytes, sizeof(gbytes)));
  }

  fs::create_directories(out_dir);
  OutputTracker out{fs::path(out_dir), &manifest};

  try {
    switch (kind) {
      case ExperimentKind::simulate: run_simulate(cfg, out); break;
      case ExperimentKind::boundstate: run_boundstate(cfg, out); break;
      case ExperimentKind::branch: run_branch(cfg, out); break;
      case ExperimentKind::verify: run_verify(cfg, out); break;
      case ExperimentKind::probe_attractor: run_probe(cfg, out); break;
      case ExperimentKind::sweep: run_sweep(cfg, out); break;
    }
  } catch (const Error& err) {
    manifest.passed = false;
    manifest.notes.push_back(std::string("error: ") + err.what());
    manifest.finished_at = now_iso();
    json j = manifest_to_json(manifest);
    write_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
    throw;
  }

  const std::vector<std::string> scripts = emit_plots(manifest, out_dir);
  for (const std::string& s : scripts) out.add(s);

  manifest.finished_at = now_iso();
  json j = manifest_to_json(manifest);
  write_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
  return manifest;
}

}  // namespace nlslab
