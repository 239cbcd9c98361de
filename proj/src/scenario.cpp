#include "bohmwork/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "bohmwork/errors.hpp"
#include "bohmwork/tmp_compare.hpp"

namespace bohmwork {

namespace {

using nlohmann::json;

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid config";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

// One JSON object being read strictly: every key read is marked, the rest are reported.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& problems)
      : node_(node), path_(std::move(path)), problems_(&problems) {
    if (node_ && !node_->is_object()) {
      fail(path_.empty() ? "config" : path_, "must be an object");
      node_ = nullptr;
    }
  }

  bool present() const { return node_ != nullptr; }
  bool has(const std::string& key) const { return node_ && node_->contains(key); }
  std::string path_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Section child(const std::string& key, bool required) {
    const json* sub = lookup(key, required);
    return Section(sub, path_of(key), *problems_);
  }

  void number(const std::string& key, double& out, bool required) {
    if (const json* v = lookup(key, required)) {
      if (!v->is_number()) return fail(path_of(key), "must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(path_of(key), "must be finite");
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out, bool required) {
    if (const json* v = lookup(key, required)) {
      const bool ok = v->is_number_integer() && (std::is_signed_v<Int> || v->get<std::int64_t>() >= 0 || v->is_number_unsigned());
      if (!ok) return fail(path_of(key), std::is_signed_v<Int> ? "must be an integer" : "must be a non-negative integer");
      out = v->get<Int>();
    }
  }

  void boolean(const std::string& key, bool& out, bool required) {
    if (const json* v = lookup(key, required)) {
      if (!v->is_boolean()) return fail(path_of(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out, bool required) {
    if (const json* v = lookup(key, required)) {
      if (!v->is_string()) return fail(path_of(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  // [re, im].
  void complex(const std::string& key, Complex& out, bool required) {
    if (const json* v = lookup(key, required)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        return fail(path_of(key), "must be [re, im]");
      }
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  void numbers(const std::string& key, std::vector<double>& out, bool required) {
    if (const json* v = lookup(key, required)) {
      if (!v->is_array()) return fail(path_of(key), "must be an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) return fail(path_of(key), "must be an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out, bool required) {
    if (const json* v = lookup(key, required)) {
      if (!v->is_array()) return fail(path_of(key), "must be an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) return fail(path_of(key), "must be an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  // A key that is valid elsewhere but has no meaning here.
  void forbid(const std::string& key, const std::string& reason) {
    if (has(key)) {
      used_.insert(key);
      fail(path_of(key), reason);
    }
  }

  void finish() {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!used_.count(key)) fail(path_of(key), "unknown key");
    }
  }

  void fail(const std::string& where, const std::string& what) { problems_->push_back(where + ": " + what); }

 private:
  const json* lookup(const std::string& key, bool required) {
    used_.insert(key);
    if (node_ && node_->contains(key)) return &node_->at(key);
    if (required) fail(path_of(key), "missing required key");
    return nullptr;
  }

  const json* node_;
  std::string path_;
  std::vector<std::string>* problems_;
  std::set<std::string> used_;
};

// Runs a module precondition check, recording its message under `where`.
template <class F>
void check(std::vector<std::string>& problems, const std::string& where, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    problems.push_back(where + ": " + e.what());
  }
}

bool is_thermal(MixtureKind k) { return k == MixtureKind::ThermalEigenstates || k == MixtureKind::ThermalCoherent; }

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

std::string engine_name(EngineChoice e) {
  switch (e) {
    case EngineChoice::Analytic: return "analytic";
    case EngineChoice::Numeric: return "numeric";
    case EngineChoice::Both: return "both";
  }
  return "analytic";
}

// Preconditions of one mixture run that can be checked before any propagation.
void check_mixture_run(std::vector<std::string>& problems, const MixtureSpec& spec, Engine engine,
                       const SamplingOptions& sampling, const NumericSetup& setup) {
  const std::string prefix = "mixture (" + to_string(spec.kind) + ", " + to_string(engine) + ")";
  check(problems, "mixture", [&] { spec.validate(); });
  if (spec.kind == MixtureKind::ThermalEigenstates) {
    check(problems, "trajectories", [&] {
      const auto w = thermal_weights(spec.oscillator, spec.beta, spec.n_max);
      allocate_strata(w, sampling.n_samples, sampling.stratum_floor);
    });
  }
  if (spec.kind == MixtureKind::ThermalCoherent && engine == Engine::Numeric && spec.n_eta_samples == 0) {
    problems.push_back("mixture.n_eta_samples: the numeric engine needs a positive label count");
  }
  if (engine == Engine::Numeric && spec.kind != MixtureKind::TwoLevelWell) {
    check(problems, prefix + " grid coverage", [&] { check_domain_coverage(spec, setup, sampling.seed); });
  }
  if (engine == Engine::Numeric) {
    check(problems, "propagation", [&] {
      PropagationPlan plan;
      plan.hamiltonian = spec.kind == MixtureKind::TwoLevelWell ? two_level_well_hamiltonian(spec.well)
                                                               : driven_oscillator(spec.oscillator);
      plan.t_end = spec.kind == MixtureKind::TwoLevelWell ? spec.well.period() : spec.oscillator.tau;
      plan.n_steps = setup.n_steps;
      plan.snapshot_stride = setup.snapshot_stride;
      plan.validate();
    });
  }
  if (engine == Engine::Numeric || spec.kind == MixtureKind::TwoLevelWell) {
    const double T = spec.kind == MixtureKind::TwoLevelWell ? spec.well.period() : spec.oscillator.tau;
    const double spacing = T * static_cast<double>(setup.snapshot_stride) / static_cast<double>(setup.n_steps);
    const double dt = setup.ode_dt > 0.0 ? setup.ode_dt : T / static_cast<double>(setup.n_steps);
    std::ostringstream msg;
    if (dt > spacing * (1.0 + 1e-9)) {
      msg << "trajectories.ode_dt: " << dt << " exceeds the snapshot spacing " << spacing;
    } else if (spacing > 4.0 * dt * (1.0 + 1e-9)) {
      msg << "trajectories.ode_dt: " << dt << " is below a quarter of the snapshot spacing " << spacing;
    }
    if (!msg.str().empty()) problems.push_back(msg.str());
  }
}

json estimate_json(const WorkDistribution& d, double beta) {
  json j;
  const Estimate m = mean_work(d);
  const ExpWorkEstimate e = exp_work(d, beta);
  j["mean_W"] = m.value;
  j["stderr"] = m.std_error;
  j["exp_work"] = {{"beta", e.beta}, {"value", e.value}, {"stderr", e.std_error}, {"tail_flag", e.tail_flag},
                   {"top_share", e.top_share}};
  j["n_samples"] = d.samples.size();
  j["n_effective"] = d.n_effective;
  return j;
}

json diagnostics_json(const MixtureDiagnostics& diag) {
  return {{"node_collisions", diag.node_collisions},
          {"domain_exits", diag.domain_exits},
          {"norm_drift", diag.max_norm_drift},
          {"work_consistency_max", diag.work_consistency_max},
          {"work_consistency_violations", diag.work_consistency_violations},
          {"n_strata", diag.n_strata}};
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 1;
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<Engine> ScenarioConfig::engines() const {
  switch (engine) {
    case EngineChoice::Analytic: return {Engine::Analytic};
    case EngineChoice::Numeric: return {Engine::Numeric};
    case EngineChoice::Both: return {Engine::Analytic, Engine::Numeric};
  }
  return {};
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError({"--set " + assignment + ": expected key=value"});
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError({"--set " + assignment + ": empty path component"});
    if (!node->is_object()) throw ConfigError({"--set " + assignment + ": " + key.substr(0, start) + " is not an object"});
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ScenarioConfig parse_config(const json& config) {
  std::vector<std::string> problems;
  ScenarioConfig c;
  Section root(&config, "", problems);

  auto& p = c.mixture.oscillator;
  {
    Section s = root.child("oscillator", true);
    s.number("m", p.m, true);
    s.number("omega", p.omega, true);
    s.number("A", p.A, true);
    s.number("hbar", p.hbar, true);
    s.number("tau", p.tau, true);
    s.finish();
  }

  double x_min = c.numeric.grid.x_min(), x_max = c.numeric.grid.x_max();
  std::size_t n_points = c.numeric.grid.size();
  {
    Section s = root.child("grid", false);
    s.number("x_min", x_min, false);
    s.number("x_max", x_max, false);
    s.integer("n_points", n_points, false);
    s.finish();
  }
  {
    Section s = root.child("propagation", false);
    s.integer("n_steps", c.numeric.n_steps, false);
    s.integer("snapshot_stride", c.numeric.snapshot_stride, false);
    s.finish();
  }
  {
    Section s = root.child("trajectories", false);
    s.integer("n_samples", c.sampling.n_samples, false);
    s.number("ode_dt", c.numeric.ode_dt, false);
    s.integer("seed", c.sampling.seed, false);
    s.integer("stratum_floor", c.sampling.stratum_floor, false);
    s.integer("failure_budget", c.sampling.failure_budget, false);
    s.integer("record_stride", c.sampling.record_stride, false);
    s.integer("keep", c.keep_trajectories, false);
    s.finish();
  }

  auto& m = c.mixture;
  {
    Section s = root.child("mixture", true);
    std::string kind;
    s.string("kind", kind, true);
    bool kind_ok = !kind.empty();
    if (kind_ok) {
      try {
        m.kind = parse_mixture_kind(kind);
      } catch (const ValidationError& e) {
        s.fail(s.path_of("kind"), e.what());
        kind_ok = false;
      }
    }
    if (kind_ok) {
      const std::string unused = "not used by mixture kind " + kind;
      const bool thermal = is_thermal(m.kind);
      if (m.kind == MixtureKind::PureEigenstate) s.integer("n", m.n, true); else s.forbid("n", unused);
      if (m.kind == MixtureKind::PureCoherent) s.complex("eta", m.eta, true); else s.forbid("eta", unused);
      if (thermal) s.number("beta", m.beta, true); else s.forbid("beta", unused);
      if (m.kind == MixtureKind::ThermalEigenstates) s.integer("n_max", m.n_max, false); else s.forbid("n_max", unused);
      if (m.kind == MixtureKind::ThermalCoherent) s.integer("n_eta_samples", m.n_eta_samples, false);
      else s.forbid("n_eta_samples", unused);
      if (m.kind == MixtureKind::TwoLevelWell) {
        Section w = s.child("well", true);
        w.number("L", m.well.L, true);
        w.complex("c0", m.well.c0, true);
        w.complex("c1", m.well.c1, true);
        w.number("m", m.well.m, false);
        w.number("hbar", m.well.hbar, false);
        w.finish();
      } else {
        s.forbid("well", unused);
      }
    }
    s.finish();
  }

  {
    std::string engine;
    root.string("engine", engine, true);
    if (engine == "analytic") c.engine = EngineChoice::Analytic;
    else if (engine == "numeric") c.engine = EngineChoice::Numeric;
    else if (engine == "both") c.engine = EngineChoice::Both;
    else if (!engine.empty()) root.fail("engine", "must be analytic, numeric or both");
  }

  c.exp_work_beta = is_thermal(m.kind) ? m.beta : 1.0;
  {
    Section s = root.child("estimators", false);
    s.number("exp_work_beta", c.exp_work_beta, false);
    s.boolean("tmp", c.tmp, false);
    s.integer("n_bins", c.n_bins, false);
    s.numbers("betas", c.betas, false);
    s.finish();
  }
  {
    Section s = root.child("outputs", false);
    std::string dir = c.out_dir.string();
    s.string("directory", dir, false);
    c.out_dir = dir;
    std::vector<std::string> formats{"json", "csv"};
    s.strings("formats", formats, false);
    c.write_csv = c.write_svg = false;
    for (const auto& f : formats) {
      if (f == "csv") c.write_csv = true;
      else if (f == "svg") c.write_svg = true;
      else if (f != "json") s.fail(s.path_of("formats"), "unknown format '" + f + "' (json, csv, svg)");
    }
    s.finish();
  }
  root.finish();
  if (!problems.empty()) throw ConfigError(problems);

  // Module preconditions.
  check(problems, "grid", [&] { c.numeric.grid = Grid1D(x_min, x_max, n_points); });
  check(problems, "oscillator", [&] { p.validate(); });
  if (c.tmp && !is_thermal(m.kind)) problems.push_back("estimators.tmp: needs a thermal mixture");
  if (c.sampling.n_samples == 0) problems.push_back("trajectories.n_samples: must be positive");
  if (c.sampling.record_stride == 0) problems.push_back("trajectories.record_stride: must be positive");
  if (c.numeric.ode_dt < 0.0) problems.push_back("trajectories.ode_dt: must be >= 0");
  if (!(c.exp_work_beta > 0.0)) problems.push_back("estimators.exp_work_beta: must be positive");
  if (c.n_bins > 1000) problems.push_back("estimators.n_bins: at most 1000");
  for (double b : c.betas) {
    if (!(b > 0.0)) problems.push_back("estimators.betas: every beta must be positive");
  }
  if (problems.empty()) {
    for (Engine e : c.engines()) check_mixture_run(problems, m, e, c.sampling, c.numeric);
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

json to_json(const ScenarioConfig& c) {
  const auto& p = c.mixture.oscillator;
  const auto& m = c.mixture;
  json j;
  j["oscillator"] = {{"m", p.m}, {"omega", p.omega}, {"A", p.A}, {"hbar", p.hbar}, {"tau", p.tau}};
  j["grid"] = {{"x_min", c.numeric.grid.x_min()}, {"x_max", c.numeric.grid.x_max()}, {"n_points", c.numeric.grid.size()}};
  j["propagation"] = {{"n_steps", c.numeric.n_steps}, {"snapshot_stride", c.numeric.snapshot_stride}};
  j["trajectories"] = {{"n_samples", c.sampling.n_samples},       {"ode_dt", c.numeric.ode_dt},
                       {"seed", c.sampling.seed},                 {"stratum_floor", c.sampling.stratum_floor},
                       {"failure_budget", c.sampling.failure_budget}, {"record_stride", c.sampling.record_stride},
                       {"keep", c.keep_trajectories}};
  json mix = {{"kind", to_string(m.kind)}};
  switch (m.kind) {
    case MixtureKind::PureEigenstate: mix["n"] = m.n; break;
    case MixtureKind::PureCoherent: mix["eta"] = complex_json(m.eta); break;
    case MixtureKind::ThermalEigenstates:
      mix["beta"] = m.beta;
      mix["n_max"] = m.n_max;
      break;
    case MixtureKind::ThermalCoherent:
      mix["beta"] = m.beta;
      mix["n_eta_samples"] = m.n_eta_samples;
      break;
    case MixtureKind::TwoLevelWell:
      mix["well"] = {{"L", m.well.L}, {"c0", complex_json(m.well.c0)}, {"c1", complex_json(m.well.c1)},
                     {"m", m.well.m}, {"hbar", m.well.hbar}};
      break;
  }
  j["mixture"] = mix;
  j["engine"] = engine_name(c.engine);
  j["estimators"] = {{"exp_work_beta", c.exp_work_beta}, {"tmp", c.tmp}, {"n_bins", c.n_bins}, {"betas", c.betas}};
  json formats = json::array({"json"});
  if (c.write_csv) formats.push_back("csv");
  if (c.write_svg) formats.push_back("svg");
  j["outputs"] = {{"directory", c.out_dir.string()}, {"formats", formats}};
  return j;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot read config"});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
}

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  ScenarioResult result;
  const auto engines = config.engines();
  const bool both = engines.size() > 1;
  json& s = result.summary;
  s["config_echo"] = to_json(config);
  s["engine"] = engine_name(config.engine);

  MixtureDiagnostics combined;
  json per_engine = json::object();
  for (Engine engine : engines) {
    SamplingOptions so = config.sampling;
    so.threads = options.threads;
    // With both engines the dumps come from the numeric run.
    const bool dumps_here = !both || engine == Engine::Numeric;
    so.keep_trajectories = options.dump_trajectories && dumps_here ? config.keep_trajectories : 0;
    so.keep_snapshots = options.dump_snapshots && engine == Engine::Numeric;
    MixtureRun run = mixture_work_distribution(config.mixture, engine, so, config.numeric);
    if (config.n_bins > 0) finalize_distribution(run.distribution, config.n_bins);

    json e = estimate_json(run.distribution, config.exp_work_beta);
    e["diagnostics"] = diagnostics_json(run.diagnostics);
    per_engine[to_string(engine)] = e;

    combined.node_collisions += run.diagnostics.node_collisions;
    combined.domain_exits += run.diagnostics.domain_exits;
    combined.max_norm_drift = std::max(combined.max_norm_drift, run.diagnostics.max_norm_drift);
    combined.work_consistency_max = std::max(combined.work_consistency_max, run.diagnostics.work_consistency_max);
    combined.work_consistency_violations += run.diagnostics.work_consistency_violations;
    combined.n_strata = std::max(combined.n_strata, run.diagnostics.n_strata);

    const std::string file = both ? "work_hist_" + to_string(engine) + ".csv" : "work_hist.csv";
    result.histograms.emplace_back(file, run.distribution.histogram);
    if (dumps_here && options.dump_trajectories) result.trajectories = std::move(run.trajectories);
    if (run.snapshots) result.snapshots = std::move(run.snapshots);
  }

  for (const char* key : {"mean_W", "stderr", "exp_work", "n_samples", "n_effective"}) {
    if (both) {
      json& slot = s[key] = json::object();
      for (const auto& [name, e] : per_engine.items()) slot[name] = e[key];
    } else {
      s[key] = per_engine.begin().value()[key];
    }
  }
  s["engines"] = per_engine;

  const auto& spec = config.mixture;
  const auto& p = spec.oscillator;
  double reference = 0.0;
  if (is_thermal(spec.kind)) {
    reference = p.mean_work();
  } else if (spec.kind != MixtureKind::TwoLevelWell) {
    reference = fock_mean_work(spec);
  }
  s["reference_mean_W"] = reference;

  if (config.tmp) {
    const TMPDistribution d = tmp_distribution(p, spec.beta, 0, options.threads);
    json t = to_json(d);
    t["second_moment"] = d.variance() + d.mean() * d.mean();
    s["tmp"] = t;
  }
  s["diagnostics"] = diagnostics_json(combined);
  return result;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_trajectories_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "sample,x0,t,x,E,W_partial\n";
  for (const auto& tr : trajectories) {
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      out << tr.sample << ',' << tr.x0 << ',' << tr.times[k] << ',' << tr.positions[k] << ',' << tr.energies[k] << ','
          << tr.work_partial[k] << '\n';
    }
  }
}

void write_scenario(const ScenarioConfig& config, const RunOptions& options, const ScenarioResult& result) {
  std::filesystem::create_directories(config.out_dir);
  json summary = result.summary;
  summary["timestamp"] = timestamp();
  write_json(config.out_dir / "summary.json", summary);
  if (config.write_csv) {
    for (const auto& [file, h] : result.histograms) write_histogram_csv(config.out_dir / file, h);
  }
  if (options.dump_trajectories) write_trajectories_csv(config.out_dir / "trajectories.csv", result.trajectories);
  if (options.dump_snapshots && result.snapshots) write_snapshots(config.out_dir / "snapshots.bin", *result.snapshots);
}

json compare_mixtures(const ScenarioConfig& config, std::size_t threads) {
  if (config.betas.empty()) throw ConfigError({"estimators.betas: compare needs at least one beta"});
  const auto& p = config.mixture.oscillator;
  const auto engines = config.engines();

  auto spec_at = [&](MixtureKind kind, double beta) {
    MixtureSpec s = config.mixture;
    s.kind = kind;
    s.beta = beta;
    if (kind != MixtureKind::ThermalEigenstates) s.n_max = -1;
    if (kind != MixtureKind::ThermalCoherent) s.n_eta_samples = 0;
    return s;
  };

  // Everything is validated before the first run.
  std::vector<std::string> problems;
  for (double beta : config.betas) {
    for (auto kind : {MixtureKind::ThermalEigenstates, MixtureKind::ThermalCoherent}) {
      for (Engine e : engines) {
        std::vector<std::string> local;
        check_mixture_run(local, spec_at(kind, beta), e, config.sampling, config.numeric);
        for (auto& msg : local) {
          std::ostringstream at;
          at << "beta " << beta << ", " << msg;
          problems.push_back(at.str());
        }
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);

  SamplingOptions so = config.sampling;
  so.threads = threads;
  json rows = json::array();
  for (double beta : config.betas) {
    json row;
    row["beta"] = beta;
    json estimates = json::object();
    for (Engine e : engines) {
      const std::string name = to_string(e);
      for (auto kind : {MixtureKind::ThermalEigenstates, MixtureKind::ThermalCoherent}) {
        MixtureRun run = mixture_work_distribution(spec_at(kind, beta), e, so, config.numeric);
        json est = estimate_json(run.distribution, beta);
        est["diagnostics"] = diagnostics_json(run.diagnostics);
        estimates[name][to_string(kind)] = est;
      }
    }
    row["estimates"] = estimates;

    const TMPDistribution d = tmp_distribution(p, beta, 0, threads);
    row["tmp"] = {{"mean", d.mean()},
                  {"second_moment", d.variance() + d.mean() * d.mean()},
                  {"exp_work", d.exp_work(beta)}};

    const auto eigen_ht = exp_work_eigenmixture_highT(p, beta);
    const auto coherent_ht = exp_work_coherent_highT(p, beta);
    const double eigen_exact = exp_work_eigenmixture(p, beta);
    row["references"] = {{"mean_W", p.mean_work()},
                         {"eigen_closed_form", eigen_exact},
                         {"coherent_high_t", {{"value", coherent_ht.value}, {"valid", coherent_ht.valid}}},
                         {"eigen_high_t", {{"value", eigen_ht.value}, {"valid", eigen_ht.valid}}}};

    // A flag is set when a value sits outside its stated tolerance.
    json flags = json::object();
    for (const auto& [name, by_kind] : estimates.items()) {
      const json& eig = by_kind[to_string(MixtureKind::ThermalEigenstates)];
      const json& coh = by_kind[to_string(MixtureKind::ThermalCoherent)];
      const double ev = eig["exp_work"]["value"], es = eig["exp_work"]["stderr"];
      const double cv = coh["exp_work"]["value"], cs = coh["exp_work"]["stderr"];
      const double em = eig["mean_W"], ems = eig["stderr"];
      const double cm = coh["mean_W"], cms = coh["stderr"];
      json f;
      f["eigen_vs_closed_form"] = std::abs(ev - eigen_exact) > 3.0 * es;
      f["eigen_vs_high_t"] = eigen_ht.valid ? json(std::abs(ev - eigen_ht.value) > 3.0 * es) : json(nullptr);
      f["coherent_vs_high_t"] = coherent_ht.valid ? json(std::abs(cv - coherent_ht.value) > 3.0 * cs) : json(nullptr);
      f["mixtures_differ"] = std::abs(ev - cv) > 5.0 * std::hypot(es, cs);
      f["eigen_vs_jarzynski"] = std::abs(ev - 1.0) > 3.0 * es;
      f["coherent_vs_jarzynski"] = std::abs(cv - 1.0) > 3.0 * cs;
      f["tmp_mean_vs_eigen"] = std::abs(d.mean() - em) > 3.0 * ems + 1e-5;
      f["tmp_mean_vs_coherent"] = std::abs(d.mean() - cm) > 3.0 * cms + 1e-5;
      f["eigen_tail"] = eig["exp_work"]["tail_flag"];
      f["coherent_tail"] = coh["exp_work"]["tail_flag"];
      flags[name] = f;
    }
    row["flags"] = flags;
    rows.push_back(row);
  }
  return {{"config_echo", to_json(config)}, {"betas", config.betas}, {"rows", rows}};
}

}  // namespace bohmwork
