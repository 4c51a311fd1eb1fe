#pragma once

// Experiment configuration: JSON schema, validation, and construction of the
// base map and cocycle it describes.

#include "cocycle/cocycle.hpp"
#include "cocycle/torus.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cocycle {

/// Malformed or out-of-range configuration; the message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Experiment {
  periodic_scan,
  exponents,
  distortion_growth,
  recover,
  renormalize,
  counterexample,
  livsic,
  holonomy,
};

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);
const std::vector<Experiment>& all_experiments();

struct ScalarFieldConfig {
  std::string kind = "trig";  // trig | exp_trig | coboundary
  TrigField field{1.0};
};

struct ConjugatorConfig {
  std::string kind = "constant";  // constant | rotated_diagonal | entries
  Matrix value;                   // constant
  TrigField psi;                  // rotated_diagonal
  TrigField rho;
  int dim = 2;                    // entries
  std::vector<TrigField> entries;
};

struct CocycleConfig {
  CocycleKind kind = CocycleKind::constant;
  Matrix value;  // constant
  ScalarFieldConfig lambda;
  ScalarFieldConfig theta;
  ConjugatorConfig conjugator;
  // shear_rotation
  double epsilon = 0.1;
  int segment_length = 200;
  int max_period = 8;
  int dim = 3;
  std::optional<std::vector<double>> seed_point;
  double margin_target = 1e-6;
  // grid
  std::string grid_path;
  std::optional<Matrix> outer_conjugation;
};

struct Knobs {
  int max_period = 6;
  int resolution = 64;
  int depth = 30;
  double tol = 1e-8;
  long orbit_length = 100000;
  int n_max = 60;
  int samples = 32;
  double k_bound = 100.0;
  double epsilon = 0.1;
  int truncation = 200;
  int window = 10;
  std::vector<double> deltas = {1e-2, 1e-3, 1e-4, 1e-5};
  double residual_tol = 1e-4;
  double gamma_tol = 0.05;
  double beta_tol = 0.15;
  int livsic_resolution = 128;
  long livsic_orbit_length = 1000000;
  double livsic_tol = 1e-3;
  int growth_n = 1000;
  std::int64_t cap = 2'000'000;
  std::optional<std::vector<double>> point;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::periodic_scan;
  std::uint64_t seed = 20240601;
  int workers = 1;
  IntMatrix base;
  CocycleConfig cocycle;
  std::optional<ScalarFieldConfig> livsic_field;
  Knobs knobs;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Throws ConfigError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// Range checks on every knob; throws ConfigError.
void validate_knobs(const Knobs& knobs);

ToralAutomorphism build_base(const ExperimentConfig& config);
ScalarField build_scalar(const ScalarFieldConfig& s, const ToralAutomorphism& f);
CocycleSpec build_cocycle(const CocycleConfig& c, const ToralAutomorphism& f,
                          std::int64_t cap = 2'000'000);

}  // namespace cocycle
