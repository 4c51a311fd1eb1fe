#pragma once

// Batch experiments: each writes CSV tables and summary.txt to an output
// directory and returns a process exit code.

#include "cocycle/config.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace cocycle {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;  // meaningful negative verdict

/// Runs config.experiment. Progress lines go to `log`. Library errors other
/// than refusals/obstructions propagate to the caller.
int run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                   std::ostream& log);

struct ValidationReport {
  bool ok = true;
  std::vector<std::pair<std::string, std::string>> lines;
};

/// Hyperbolicity, Hoelder estimate, periodic-point cap feasibility and a rough cost estimate.
ValidationReport validate_config(const ExperimentConfig& config);

}  // namespace cocycle
