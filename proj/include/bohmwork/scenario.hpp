#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohmwork/errors.hpp"
#include "bohmwork/mixtures_estimators.hpp"

namespace bohmwork {

/// Config problems: every unknown key, missing required key and bad value, one per line,
/// each prefixed with its dotted path.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Process exit status for an error: 2 for validation, 3 for numerical failure, 1 otherwise.
int exit_code(const std::exception& e);

enum class EngineChoice { Analytic, Numeric, Both };

struct ScenarioConfig {
  /// Carries the oscillator parameters.
  MixtureSpec mixture;
  NumericSetup numeric;
  /// seed, n_samples, stratum_floor, failure_budget, record_stride; threads is set by the caller.
  SamplingOptions sampling;
  EngineChoice engine = EngineChoice::Analytic;
  /// Trajectories kept for trajectories.csv.
  std::size_t keep_trajectories = 50;
  /// Inverse temperature of the reported <e^{-beta W}>; thermal mixtures default to their beta.
  double exp_work_beta = 1.0;
  /// Attach the two-measurement distribution (thermal oscillator mixtures only).
  bool tmp = false;
  std::size_t n_bins = 0;
  /// Inverse temperatures for compare.
  std::vector<double> betas;
  std::filesystem::path out_dir = "results";
  bool write_csv = true;
  bool write_svg = false;

  std::vector<Engine> engines() const;
};

/// Applies `path.to.key=value`; the value is read as JSON when it parses and as a string otherwise.
/// Intermediate objects are created as needed.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Strict parse: unknown keys, keys irrelevant to the mixture kind, missing required keys and
/// module precondition violations are all collected into one ConfigError.
ScenarioConfig parse_config(const nlohmann::json& config);

/// The resolved config, defaults included, in the input schema.
nlohmann::json to_json(const ScenarioConfig& config);

/// Reads and parses a JSON file; syntax errors become ConfigError.
nlohmann::json load_config_file(const std::filesystem::path& path);

struct RunOptions {
  std::size_t threads = 0;
  bool dump_snapshots = false;
  bool dump_trajectories = false;
};

/// Summary and side products of one scenario, not yet written.
struct ScenarioResult {
  nlohmann::json summary;
  /// (file name, histogram) per engine.
  std::vector<std::pair<std::string, Histogram>> histograms;
  std::vector<Trajectory> trajectories;
  std::optional<SnapshotSeries> snapshots;
};

/// Runs the configured pipeline without touching the file system.
ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options);

/// Creates the output directory and writes summary.json, the histogram CSVs,
/// trajectories.csv and snapshots.bin as requested.
void write_scenario(const ScenarioConfig& config, const RunOptions& options, const ScenarioResult& result);

/// Both thermal mixtures and the TMP distribution at each beta, with closed-form references
/// and discrepancy flags.
nlohmann::json compare_mixtures(const ScenarioConfig& config, std::size_t threads);

/// `sample,x0,t,x,E,W_partial`, 17 significant digits.
void write_trajectories_csv(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories);

/// Serializes JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace bohmwork
