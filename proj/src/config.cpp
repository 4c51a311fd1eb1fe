#include "cocycle/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cocycle {

using nlohmann::json;

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::string>> names = {
      {Experiment::periodic_scan, "periodic-scan"},
      {Experiment::exponents, "exponents"},
      {Experiment::distortion_growth, "distortion-growth"},
      {Experiment::recover, "recover"},
      {Experiment::renormalize, "renormalize"},
      {Experiment::counterexample, "counterexample"},
      {Experiment::livsic, "livsic"},
      {Experiment::holonomy, "holonomy"},
  };
  return names;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key) + ": missing");
  return *it;
}

template <class T>
T as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
void read_opt(const json& j, const std::string& key, const std::string& path, T& out) {
  auto it = j.find(key);
  if (it != j.end()) out = as<T>(*it, join(path, key));
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  if (cols == 0) throw ConfigError(path + ": rows must be non-empty arrays");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(rp + ": ragged matrix row");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = as<double>(row[static_cast<std::size_t>(k)], rp + "[" + std::to_string(k) + "]");
  }
  return m;
}

json trig_json(const TrigField& t) {
  json terms = json::array();
  for (const auto& term : t.terms()) {
    terms.push_back({{"amplitude", term.amplitude},
                     {"wavevector", term.wavevector},
                     {"phase", term.phase}});
  }
  return {{"constant", t.constant()}, {"terms", terms}};
}

TrigField trig_from(const json& j, const std::string& path) {
  if (j.is_number()) return TrigField(j.get<double>());
  if (!j.is_object()) throw ConfigError(path + ": expected a number or {constant, terms}");
  double constant = 0.0;
  read_opt(j, "constant", path, constant);
  std::vector<TrigTerm> terms;
  if (auto it = j.find("terms"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(join(path, "terms") + ": expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string tp = join(path, "terms") + "[" + std::to_string(i) + "]";
      const json& t = (*it)[i];
      TrigTerm term;
      term.amplitude = as<double>(require(t, "amplitude", tp), join(tp, "amplitude"));
      term.wavevector = as<std::vector<int>>(require(t, "wavevector", tp), join(tp, "wavevector"));
      read_opt(t, "phase", tp, term.phase);
      terms.push_back(std::move(term));
    }
  }
  return TrigField(constant, std::move(terms));
}

json scalar_json(const ScalarFieldConfig& s) { return {{"kind", s.kind}, {"field", trig_json(s.field)}}; }

ScalarFieldConfig scalar_from(const json& j, const std::string& path) {
  ScalarFieldConfig s;
  if (j.is_number()) {
    s.field = TrigField(j.get<double>());
    return s;
  }
  read_opt(j, "kind", path, s.kind);
  if (s.kind != "trig" && s.kind != "exp_trig" && s.kind != "coboundary")
    throw ConfigError(join(path, "kind") + ": expected trig, exp_trig or coboundary");
  s.field = trig_from(require(j, "field", path), join(path, "field"));
  return s;
}

json conjugator_json(const ConjugatorConfig& c) {
  json j = {{"kind", c.kind}};
  if (c.kind == "constant") j["value"] = matrix_json(c.value);
  if (c.kind == "rotated_diagonal") {
    j["psi"] = trig_json(c.psi);
    j["rho"] = trig_json(c.rho);
  }
  if (c.kind == "entries") {
    j["dim"] = c.dim;
    json e = json::array();
    for (const auto& t : c.entries) e.push_back(trig_json(t));
    j["entries"] = e;
  }
  return j;
}

ConjugatorConfig conjugator_from(const json& j, const std::string& path) {
  ConjugatorConfig c;
  c.kind = as<std::string>(require(j, "kind", path), join(path, "kind"));
  if (c.kind == "constant") {
    c.value = matrix_from(require(j, "value", path), join(path, "value"));
  } else if (c.kind == "rotated_diagonal") {
    c.psi = trig_from(require(j, "psi", path), join(path, "psi"));
    c.rho = trig_from(require(j, "rho", path), join(path, "rho"));
  } else if (c.kind == "entries") {
    c.dim = as<int>(require(j, "dim", path), join(path, "dim"));
    const json& e = require(j, "entries", path);
    if (!e.is_array() || static_cast<int>(e.size()) != c.dim * c.dim)
      throw ConfigError(join(path, "entries") + ": expected dim*dim trig fields");
    for (std::size_t i = 0; i < e.size(); ++i)
      c.entries.push_back(trig_from(e[i], join(path, "entries") + "[" + std::to_string(i) + "]"));
  } else {
    throw ConfigError(join(path, "kind") + ": expected constant, rotated_diagonal or entries");
  }
  return c;
}

json cocycle_json(const CocycleConfig& c) {
  json j = {{"kind", to_string(c.kind)}};
  switch (c.kind) {
    case CocycleKind::constant:
      j["value"] = matrix_json(c.value);
      break;
    case CocycleKind::conformal:
      j["lambda"] = scalar_json(c.lambda);
      j["theta"] = scalar_json(c.theta);
      break;
    case CocycleKind::conjugated_conformal:
      j["lambda"] = scalar_json(c.lambda);
      j["theta"] = scalar_json(c.theta);
      j["conjugator"] = conjugator_json(c.conjugator);
      break;
    case CocycleKind::shear_rotation:
      j["epsilon"] = c.epsilon;
      j["segment_length"] = c.segment_length;
      j["max_period"] = c.max_period;
      j["dim"] = c.dim;
      j["margin_target"] = c.margin_target;
      if (c.seed_point) j["seed_point"] = *c.seed_point;
      break;
    case CocycleKind::grid:
      j["path"] = c.grid_path;
      break;
  }
  if (c.outer_conjugation) j["outer_conjugation"] = matrix_json(*c.outer_conjugation);
  return j;
}

CocycleConfig cocycle_from(const json& j, const std::string& path) {
  CocycleConfig c;
  const std::string kind = as<std::string>(require(j, "kind", path), join(path, "kind"));
  try {
    c.kind = cocycle_kind_from_string(kind);
  } catch (const DomainError&) {
    throw ConfigError(join(path, "kind") + ": unknown cocycle kind '" + kind + "'");
  }
  switch (c.kind) {
    case CocycleKind::constant:
      c.value = matrix_from(require(j, "value", path), join(path, "value"));
      break;
    case CocycleKind::conjugated_conformal:
      c.conjugator = conjugator_from(require(j, "conjugator", path), join(path, "conjugator"));
      [[fallthrough]];
    case CocycleKind::conformal:
      c.lambda = scalar_from(require(j, "lambda", path), join(path, "lambda"));
      c.theta = scalar_from(require(j, "theta", path), join(path, "theta"));
      break;
    case CocycleKind::shear_rotation:
      read_opt(j, "epsilon", path, c.epsilon);
      read_opt(j, "segment_length", path, c.segment_length);
      read_opt(j, "max_period", path, c.max_period);
      read_opt(j, "dim", path, c.dim);
      read_opt(j, "margin_target", path, c.margin_target);
      if (auto it = j.find("seed_point"); it != j.end())
        c.seed_point = as<std::vector<double>>(*it, join(path, "seed_point"));
      if (!(c.epsilon > 0.0)) throw ConfigError(join(path, "epsilon") + ": must be > 0");
      if (c.segment_length < 1) throw ConfigError(join(path, "segment_length") + ": must be >= 1");
      if (c.max_period < 1 || c.max_period > 30)
        throw ConfigError(join(path, "max_period") + ": must be in [1, 30]");
      if (c.dim < 3) throw ConfigError(join(path, "dim") + ": must be >= 3");
      break;
    case CocycleKind::grid:
      c.grid_path = as<std::string>(require(j, "path", path), join(path, "path"));
      break;
  }
  if (auto it = j.find("outer_conjugation"); it != j.end())
    c.outer_conjugation = matrix_from(*it, join(path, "outer_conjugation"));
  return c;
}

json knobs_json(const Knobs& k) {
  json j = {{"max_period", k.max_period},
            {"resolution", k.resolution},
            {"depth", k.depth},
            {"tol", k.tol},
            {"orbit_length", k.orbit_length},
            {"n_max", k.n_max},
            {"samples", k.samples},
            {"k_bound", k.k_bound},
            {"epsilon", k.epsilon},
            {"truncation", k.truncation},
            {"window", k.window},
            {"deltas", k.deltas},
            {"residual_tol", k.residual_tol},
            {"gamma_tol", k.gamma_tol},
            {"beta_tol", k.beta_tol},
            {"livsic_resolution", k.livsic_resolution},
            {"livsic_orbit_length", k.livsic_orbit_length},
            {"livsic_tol", k.livsic_tol},
            {"growth_n", k.growth_n},
            {"cap", k.cap}};
  if (k.point) j["point"] = *k.point;
  return j;
}

Knobs knobs_from(const json& j, const std::string& path) {
  Knobs k;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  static const std::vector<std::string> known = {
      "max_period", "resolution", "depth", "tol", "orbit_length", "n_max", "samples",
      "k_bound", "epsilon", "truncation", "window", "deltas", "residual_tol", "gamma_tol",
      "beta_tol", "livsic_resolution", "livsic_orbit_length", "livsic_tol", "growth_n", "cap",
      "point"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(join(path, key) + ": unknown knob");
  }
  read_opt(j, "max_period", path, k.max_period);
  read_opt(j, "resolution", path, k.resolution);
  read_opt(j, "depth", path, k.depth);
  read_opt(j, "tol", path, k.tol);
  read_opt(j, "orbit_length", path, k.orbit_length);
  read_opt(j, "n_max", path, k.n_max);
  read_opt(j, "samples", path, k.samples);
  read_opt(j, "k_bound", path, k.k_bound);
  read_opt(j, "epsilon", path, k.epsilon);
  read_opt(j, "truncation", path, k.truncation);
  read_opt(j, "window", path, k.window);
  read_opt(j, "deltas", path, k.deltas);
  read_opt(j, "residual_tol", path, k.residual_tol);
  read_opt(j, "gamma_tol", path, k.gamma_tol);
  read_opt(j, "beta_tol", path, k.beta_tol);
  read_opt(j, "livsic_resolution", path, k.livsic_resolution);
  read_opt(j, "livsic_orbit_length", path, k.livsic_orbit_length);
  read_opt(j, "livsic_tol", path, k.livsic_tol);
  read_opt(j, "growth_n", path, k.growth_n);
  read_opt(j, "cap", path, k.cap);
  if (auto it = j.find("point"); it != j.end())
    k.point = as<std::vector<double>>(*it, join(path, "point"));
  return k;
}

template <class T>
void check_range(const std::string& name, T v, T lo, T hi) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << "knobs." << name << ": " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, name] : experiment_names())
    if (k == e) return name;
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  for (const auto& [k, n] : experiment_names())
    if (n == name) return k;
  throw ConfigError("experiment: unknown experiment '" + name + "'");
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    for (const auto& [k, n] : experiment_names()) v.push_back(k);
    return v;
  }();
  return all;
}

void validate_knobs(const Knobs& k) {
  check_range("max_period", k.max_period, 1, 30);
  check_range("resolution", k.resolution, 2, 4096);
  check_range("depth", k.depth, 2, 100000);
  check_range("tol", k.tol, 1e-14, 1e-1);
  check_range("orbit_length", k.orbit_length, 100L, 100000000L);
  check_range("n_max", k.n_max, 20, 1000000);
  check_range("samples", k.samples, 1, 1000000);
  check_range("k_bound", k.k_bound, 1.0, 1e300);
  check_range("epsilon", k.epsilon, 1e-6, 10.0);
  check_range("truncation", k.truncation, 1, 100000);
  check_range("window", k.window, 1, 10000);
  check_range("residual_tol", k.residual_tol, 0.0, 1e3);
  check_range("gamma_tol", k.gamma_tol, 0.0, 1e3);
  check_range("beta_tol", k.beta_tol, 0.0, 10.0);
  check_range("livsic_resolution", k.livsic_resolution, 2, 4096);
  check_range("livsic_orbit_length", k.livsic_orbit_length, 100L, 100000000L);
  check_range("livsic_tol", k.livsic_tol, 0.0, 1e3);
  check_range("growth_n", k.growth_n, 1, 100000000);
  check_range("cap", k.cap, std::int64_t{1}, std::int64_t{1'000'000'000});
  if (k.deltas.size() < 2) throw ConfigError("knobs.deltas: need at least two values");
  for (double d : k.deltas)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("knobs.deltas: values must lie in (0, 1)");
}

json to_json(const ExperimentConfig& c) {
  json base = json::array();
  for (Eigen::Index i = 0; i < c.base.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.base.cols(); ++k) row.push_back(c.base(i, k));
    base.push_back(row);
  }
  json j = {{"experiment", to_string(c.experiment)},
            {"seed", c.seed},
            {"workers", c.workers},
            {"base", {{"matrix", base}}},
            {"cocycle", cocycle_json(c.cocycle)},
            {"knobs", knobs_json(c.knobs)}};
  if (c.livsic_field) j["livsic_field"] = scalar_json(*c.livsic_field);
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  if (auto it = j.find("experiment"); it != j.end())
    c.experiment = experiment_from_string(as<std::string>(*it, "experiment"));
  read_opt(j, "seed", "", c.seed);
  read_opt(j, "workers", "", c.workers);
  if (c.workers < 1) throw ConfigError("workers: must be >= 1");

  const json& base = require(j, "base", "");
  const json& m = require(base, "matrix", "base");
  if (!m.is_array() || m.empty()) throw ConfigError("base.matrix: expected a square integer array");
  const auto k = static_cast<Eigen::Index>(m.size());
  c.base.resize(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const json& row = m[static_cast<std::size_t>(r)];
    const std::string rp = "base.matrix[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != k)
      throw ConfigError(rp + ": matrix must be square");
    for (Eigen::Index s = 0; s < k; ++s) {
      const json& v = row[static_cast<std::size_t>(s)];
      if (!v.is_number_integer()) throw ConfigError(rp + "[" + std::to_string(s) + "]: expected an integer");
      c.base(r, s) = v.get<std::int64_t>();
    }
  }
  c.cocycle = cocycle_from(require(j, "cocycle", ""), "cocycle");
  if (auto it = j.find("livsic_field"); it != j.end()) c.livsic_field = scalar_from(*it, "livsic_field");
  if (auto it = j.find("knobs"); it != j.end()) c.knobs = knobs_from(*it, "knobs");
  validate_knobs(c.knobs);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config file " + path.string());
  out << to_json(config).dump(2) << '\n';
}

ToralAutomorphism build_base(const ExperimentConfig& config) {
  try {
    return ToralAutomorphism(config.base);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("base.matrix: ") + e.what());
  }
}

ScalarField build_scalar(const ScalarFieldConfig& s, const ToralAutomorphism& f) {
  if (s.kind == "exp_trig") return ScalarField::exp_trig(s.field);
  if (s.kind == "coboundary") return ScalarField::coboundary(s.field, f);
  return ScalarField::trig(s.field);
}

CocycleSpec build_cocycle(const CocycleConfig& c, const ToralAutomorphism& f, std::int64_t cap) {
  auto check_waves = [&f](const TrigField& t, const std::string& where) {
    for (const auto& term : t.terms())
      if (static_cast<Eigen::Index>(term.wavevector.size()) != f.dim())
        throw ConfigError(where + ": wavevector length must equal the torus dimension");
  };
  std::optional<CocycleSpec> spec;
  switch (c.kind) {
    case CocycleKind::constant:
      spec = CocycleSpec::constant(c.value);
      break;
    case CocycleKind::conformal:
      check_waves(c.lambda.field, "cocycle.lambda");
      check_waves(c.theta.field, "cocycle.theta");
      spec = CocycleSpec::conformal(build_scalar(c.lambda, f), build_scalar(c.theta, f));
      break;
    case CocycleKind::conjugated_conformal: {
      check_waves(c.lambda.field, "cocycle.lambda");
      check_waves(c.theta.field, "cocycle.theta");
      ConjugatorField conj = ConjugatorField::constant(Matrix::Identity(2, 2));
      if (c.conjugator.kind == "constant") {
        conj = ConjugatorField::constant(c.conjugator.value);
      } else if (c.conjugator.kind == "rotated_diagonal") {
        check_waves(c.conjugator.psi, "cocycle.conjugator.psi");
        check_waves(c.conjugator.rho, "cocycle.conjugator.rho");
        conj = ConjugatorField::rotated_diagonal(c.conjugator.psi, c.conjugator.rho);
      } else {
        for (const auto& e : c.conjugator.entries) check_waves(e, "cocycle.conjugator.entries");
        conj = ConjugatorField::entries(c.conjugator.dim, c.conjugator.entries);
      }
      spec = build_conjugated_conformal(std::move(conj), build_scalar(c.lambda, f),
                                        build_scalar(c.theta, f), f);
      break;
    }
    case CocycleKind::shear_rotation: {
      ShearRotationOptions opts;
      opts.dim = c.dim;
      opts.margin_target = c.margin_target;
      opts.cap = cap;
      if (c.seed_point) {
        if (static_cast<Eigen::Index>(c.seed_point->size()) != f.dim())
          throw ConfigError("cocycle.seed_point: length must equal the torus dimension");
        opts.seed = quantize(TorusPoint(Eigen::Map<const Vector>(c.seed_point->data(),
                                                                 static_cast<Eigen::Index>(c.seed_point->size()))));
      }
      spec = build_shear_rotation(f, c.epsilon, c.segment_length, c.max_period, opts);
      break;
    }
    case CocycleKind::grid:
      spec = CocycleSpec::grid(read_grid_payload(c.grid_path));
      break;
  }
  if (c.outer_conjugation) spec = spec->conjugated_by(*c.outer_conjugation);
  return *spec;
}

}  // namespace cocycle
