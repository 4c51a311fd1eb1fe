// cocycle-lab: batch front-end for the cocycle experiments.
//
//   cocycle-lab run [experiment] --config cfg.json --out-dir out [--workers N] [--seed S]
//   cocycle-lab validate --config cfg.json
//
// Exit codes: 0 all checks passed, 2 meaningful negative verdict, 1 error.

#include "cocycle/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace cocycle;
  CLI::App app{"Linear cocycles over hyperbolic toral automorphisms"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string experiment;
  int workers = 0;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run an experiment and write CSV tables plus summary.txt");
  run->add_option("experiment", experiment, "experiment name (overrides the config)");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--workers", workers, "parallel workers (overrides the config)")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "random seed (overrides the config)");

  auto* validate = app.add_subcommand("validate", "check a config and estimate its cost");
  validate->add_option("--config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config = load_config(config_path);
    if (*validate) {
      const auto report = validate_config(config);
      for (const auto& [k, v] : report.lines) std::cout << k << '=' << v << '\n';
      return report.ok ? kExitOk : kExitError;
    }
    if (!experiment.empty()) config.experiment = experiment_from_string(experiment);
    if (workers > 0) config.workers = workers;
    if (seed) config.seed = *seed;
    const int code = run_experiment(config, out_dir, std::cerr);
    std::cerr << "wrote " << out_dir << "/summary.txt (exit " << code << ")\n";
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
