// bohmwork: run, compare and plot work-distribution scenarios from JSON configs.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bohmwork/errors.hpp"
#include "bohmwork/plots.hpp"
#include "bohmwork/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;

using bohmwork::ScenarioConfig;

ScenarioConfig load(const std::string& path, const std::vector<std::string>& overrides, const std::string& out_dir) {
  nlohmann::json j = bohmwork::load_config_file(path);
  for (const auto& o : overrides) bohmwork::apply_override(j, o);
  ScenarioConfig c = bohmwork::parse_config(j);
  if (!out_dir.empty()) c.out_dir = out_dir;
  return c;
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw bohmwork::ConfigError({"--betas: not a number: '" + item + "'"});
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian work distributions for driven quantum systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, betas_text, results_dir;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  bool dump_snapshots = false, dump_trajectories = false;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("config", config_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory (overrides outputs.directory)");
  run->add_option("--set", overrides, "Override a config key: path.to.key=value")->take_all();
  run->add_flag("--dump-snapshots", dump_snapshots, "Write snapshots.bin of the first numeric stratum");
  run->add_flag("--dump-trajectories", dump_trajectories, "Write trajectories.csv");
  run->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  auto* compare = app.add_subcommand("compare", "Compare the thermal mixtures and TMP across temperatures");
  compare->add_option("config", config_path, "Scenario JSON")->required();
  compare->add_option("--betas", betas_text, "Comma-separated inverse temperatures (overrides estimators.betas)");
  compare->add_option("--out", out_dir, "Output directory (overrides outputs.directory)");
  compare->add_option("--set", overrides, "Override a config key: path.to.key=value")->take_all();
  compare->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  auto* plot = app.add_subcommand("plot", "Write SVG plots for a results directory");
  plot->add_option("results", results_dir, "Directory written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) {
      const ScenarioConfig c = load(config_path, overrides, out_dir);
      if (dump_snapshots && c.engine == bohmwork::EngineChoice::Analytic) {
        throw bohmwork::ConfigError({"--dump-snapshots: needs the numeric engine"});
      }
      const bohmwork::RunOptions options{threads, dump_snapshots, dump_trajectories};
      const auto result = bohmwork::run_scenario(c, options);
      bohmwork::write_scenario(c, options, result);
      if (c.write_svg) bohmwork::plot_results(c.out_dir);
      std::cout << "wrote " << (c.out_dir / "summary.json").string() << '\n';
    } else if (*compare) {
      ScenarioConfig c = load(config_path, overrides, out_dir);
      if (!betas_text.empty()) c.betas = parse_betas(betas_text);
      const auto report = bohmwork::compare_mixtures(c, threads);
      std::filesystem::create_directories(c.out_dir);
      bohmwork::write_json(c.out_dir / "compare.json", report);
      std::cout << "wrote " << (c.out_dir / "compare.json").string() << '\n';
    } else if (*plot) {
      for (const auto& path : bohmwork::plot_results(results_dir)) std::cout << "wrote " << path.string() << '\n';
    }
  } catch (const bohmwork::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return bohmwork::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bohmwork::exit_code(e);
  }
  return kExitOk;
}
