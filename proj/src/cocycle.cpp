#include "cocycle/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace cocycle {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string point_string(const TorusPoint& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.dim(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

constexpr char kGridMagic[8] = {'C', 'C', 'G', 'R', 'I', 'D', '0', '1'};

double dist_to_pi_z(double s) {
  return std::abs(s - std::numbers::pi * std::round(s / std::numbers::pi));
}

}  // namespace

std::string to_string(CocycleKind kind) {
  switch (kind) {
    case CocycleKind::constant: return "constant";
    case CocycleKind::conformal: return "conformal";
    case CocycleKind::conjugated_conformal: return "conjugated_conformal";
    case CocycleKind::shear_rotation: return "shear_rotation";
    case CocycleKind::grid: return "grid";
  }
  return "unknown";
}

CocycleKind cocycle_kind_from_string(const std::string& name) {
  for (auto k : {CocycleKind::constant, CocycleKind::conformal, CocycleKind::conjugated_conformal,
                 CocycleKind::shear_rotation, CocycleKind::grid}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown cocycle kind '" + name + "'");
}

// --- ShearRotationData -------------------------------------------------------

double ShearRotationData::base_angle(const TorusPoint& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segment) best = std::min(best, torus_dist(x, s));
  return angle_scale * best;
}

double ShearRotationData::angle(const TorusPoint& x) const {
  double a = base_angle(x);
  for (const auto& b : bumps) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : b.orbit) d = std::min(d, torus_dist(x, p));
    if (d < b.radius) a += b.height * (1.0 - d / b.radius);
  }
  return a;
}

double ShearRotationData::angle_sum(const std::vector<TorusPoint>& orbit) const {
  double s = 0.0;
  for (const auto& p : orbit) s += angle(p);
  return s;
}

Matrix ShearRotationData::matrix_at(double a) const {
  Matrix m = Matrix::Identity(dim, dim);
  m.topLeftCorner(2, 2) = rotation2(a);
  m(0, 2) = epsilon;
  return m;
}

// --- GridCocycle -------------------------------------------------------------

Matrix GridCocycle::interpolate(const TorusPoint& x) const {
  const double u = x[0] * resolution;
  const double v = x[1] * resolution;
  const int i0 = static_cast<int>(std::floor(u)) % resolution;
  const int j0 = static_cast<int>(std::floor(v)) % resolution;
  const double t = u - std::floor(u);
  const double s = v - std::floor(v);
  const int i1 = (i0 + 1) % resolution;
  const int j1 = (j0 + 1) % resolution;
  auto at = [this](int i, int j) -> const Matrix& {
    return values[static_cast<std::size_t>(i) * resolution + j];
  };
  return (1 - t) * (1 - s) * at(i0, j0) + t * (1 - s) * at(i1, j0) + (1 - t) * s * at(i0, j1) +
         t * s * at(i1, j1);
}

double GridCocycle::lipschitz_bound() const {
  double worst = 0.0;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const Matrix& v = values[static_cast<std::size_t>(i) * resolution + j];
      const Matrix& a = values[static_cast<std::size_t>((i + 1) % resolution) * resolution + j];
      const Matrix& b = values[static_cast<std::size_t>(i) * resolution + (j + 1) % resolution];
      worst = std::max({worst, op_norm(a - v), op_norm(b - v)});
    }
  }
  return std::sqrt(2.0) * resolution * worst;
}

// --- CocycleSpec -------------------------------------------------------------

CocycleSpec CocycleSpec::constant(Matrix value) {
  if (value.rows() != value.cols() || value.rows() < 2) {
    throw DomainError("constant cocycle needs a square matrix of size >= 2");
  }
  const int d = static_cast<int>(value.rows());
  CocycleSpec c(ConstantCocycle{std::move(value)}, d);
  c.set_holder_claim(1.0, 0.0);
  return c;
}

CocycleSpec CocycleSpec::conformal(ScalarField lambda, ScalarField theta) {
  // |A(x) - A(y)| <= L_lambda d + sup(lambda) L_theta d, and for the inverse
  // (1/lambda) R(-theta) the same with 1/lambda.
  const auto [lo, hi] = lambda.range();
  const double l_lambda = lambda.lipschitz_bound();
  const double l_theta = theta.lipschitz_bound();
  const double l = lo > 0.0 ? l_lambda + hi * l_theta + l_lambda / (lo * lo) + l_theta / lo
                            : std::numeric_limits<double>::infinity();
  CocycleSpec c(ConformalCocycle{std::move(lambda), std::move(theta)}, 2);
  c.set_holder_claim(1.0, l);
  return c;
}

CocycleSpec CocycleSpec::conjugated_conformal(ConjugatorField conjugator, ScalarField lambda,
                                              ScalarField theta, const ToralAutomorphism& f) {
  if (conjugator.dim() != 2) throw DomainError("conjugated_conformal cocycles have d = 2");
  return CocycleSpec(ConjugatedConformalCocycle{std::move(conjugator), std::move(lambda),
                                                std::move(theta),
                                                std::make_shared<const ToralAutomorphism>(f)},
                     2);
}

CocycleSpec CocycleSpec::shear_rotation(std::shared_ptr<const ShearRotationData> data) {
  const int d = data->dim;
  CocycleSpec c(std::move(data), d);
  return c;
}

CocycleSpec CocycleSpec::grid(GridCocycle grid) {
  if (grid.resolution < 1 || grid.values.size() != static_cast<std::size_t>(grid.resolution) *
                                                       static_cast<std::size_t>(grid.resolution)) {
    throw DomainError("grid cocycle payload size does not match its resolution");
  }
  const int d = grid.dim;
  // |A^{-1}(x) - A^{-1}(y)| <= |A^{-1}(x)| |A^{-1}(y)| |A(x) - A(y)|; the inverse
  // norm is sampled on a 4x refinement with 1.5x headroom.
  double inv_norm = 0.0;
  const int fine = 4 * grid.resolution;
  for (int i = 0; i < fine; ++i)
    for (int j = 0; j < fine; ++j) {
      const Vector s = singular_values(grid.interpolate(TorusPoint{double(i) / fine, double(j) / fine}));
      inv_norm = std::max(inv_norm, 1.0 / s(s.size() - 1));
    }
  inv_norm *= 1.5;
  const double l = grid.lipschitz_bound() * (1.0 + inv_norm * inv_norm);
  CocycleSpec c(std::move(grid), d);
  c.set_holder_claim(1.0, l);
  return c;
}

CocycleSpec CocycleSpec::conjugated_by(const Matrix& x) const {
  if (x.rows() != d_ || x.cols() != d_) throw DomainError("conjugating matrix has wrong size");
  Eigen::FullPivLU<Matrix> lu(x);
  if (!lu.isInvertible()) throw DomainError("conjugating matrix is singular");
  CocycleSpec out = *this;
  const Matrix inv = lu.inverse();
  out.outer_ = outer_ ? Matrix(x * *outer_) : x;
  out.outer_inv_ = outer_inv_ ? Matrix(*outer_inv_ * inv) : inv;
  out.holder_const_ = holder_const_ * condition_number(x);
  return out;
}

CocycleKind CocycleSpec::kind() const {
  return std::visit(
      Overloaded{[](const ConstantCocycle&) { return CocycleKind::constant; },
                 [](const ConformalCocycle&) { return CocycleKind::conformal; },
                 [](const ConjugatedConformalCocycle&) { return CocycleKind::conjugated_conformal; },
                 [](const std::shared_ptr<const ShearRotationData>&) {
                   return CocycleKind::shear_rotation;
                 },
                 [](const GridCocycle&) { return CocycleKind::grid; }},
      payload_);
}

Matrix CocycleSpec::value(const TorusPoint& x) const {
  Matrix a = std::visit(
      Overloaded{
          [](const ConstantCocycle& c) -> Matrix { return c.value; },
          [&x](const ConformalCocycle& c) -> Matrix { return c.lambda(x) * rotation2(c.theta(x)); },
          [&x](const ConjugatedConformalCocycle& c) -> Matrix {
            const Matrix here = c.conjugator(x);
            const Matrix there = c.conjugator(c.base->step(x));
            return there * (c.lambda(x) * rotation2(c.theta(x))) * here.inverse();
          },
          [&x](const std::shared_ptr<const ShearRotationData>& c) -> Matrix {
            return c->matrix_at(c->angle(x));
          },
          [&x](const GridCocycle& g) -> Matrix { return g.interpolate(x); }},
      payload_);
  if (outer_) return *outer_ * a * *outer_inv_;
  return a;
}

Matrix evaluate(const CocycleSpec& c, const TorusPoint& x) {
  Matrix a = c.value(x);
  const double fro = a.norm();
  const double det = std::abs(a.determinant());
  // sigma_min >= |det| / |A|_F^{d-1}; only fall back to the SVD when that is inconclusive.
  const double lower = det / std::pow(fro, static_cast<double>(a.rows() - 1));
  if (!(lower > 1e-12 * fro)) {
    const Vector s = singular_values(a);
    if (!(s(s.size() - 1) > 1e-12 * s(0))) {
      throw DomainError("cocycle is degenerate at x = " + point_string(x) +
                        " (smallest singular value " + std::to_string(s(s.size() - 1)) + ")");
    }
  }
  return a;
}

Matrix compose(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x, long n) {
  const int d = c.dim();
  Matrix p = Matrix::Identity(d, d);
  TorusPoint y = x;
  auto guard = [&p]() {
    if (!(p.cwiseAbs().maxCoeff() < 1e250)) {
      throw DomainError(
          "scaled-product overflow in compose(); use the log-scaled distortion routines");
    }
  };
  if (n >= 0) {
    for (long i = 0; i < n; ++i) {
      p = evaluate(c, y) * p;
      y = f.step(y);
      guard();
    }
  } else {
    for (long i = 0; i < -n; ++i) {
      y = f.step_back(y);
      p = evaluate(c, y).inverse() * p;
      guard();
    }
  }
  return p;
}

// --- Constructions -------------------------------------------------------------

CocycleSpec build_shear_rotation(const ToralAutomorphism& f, double epsilon, int segment_length,
                                 int max_period, const ShearRotationOptions& options) {
  if (!(epsilon > 0.0) || segment_length < 1 || max_period < 1) {
    throw DomainError("shear_rotation needs epsilon > 0, N >= 1, P >= 1");
  }
  if (options.dim < 3) throw DomainError("shear_rotation needs d >= 3");
  auto data = std::make_shared<ShearRotationData>();
  data->epsilon = epsilon;
  data->segment_length = segment_length;
  data->max_period = max_period;
  data->dim = options.dim;
  data->seed = options.seed ? *options.seed : default_seed(f.dim());
  data->segment = f.orbit(data->seed, segment_length);
  data->angle_scale = epsilon / (2.0 * torus_diameter(f.dim()));

  const auto orbits = periodic_orbits_up_to(f, max_period, options.cap);
  std::vector<std::vector<TorusPoint>> points;
  points.reserve(orbits.size());
  for (const auto& orb : orbits) {
    std::vector<TorusPoint> pts;
    for (const auto& p : orb.orbit) pts.push_back(p.to_torus());
    points.push_back(std::move(pts));
  }

  data->margin = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < points.size(); ++m) {
    const auto& orb = points[m];
    for (const auto& p : orb) {
      if (data->base_angle(p) <= 0.0) {
        throw DomainError("periodic orbit of period " + std::to_string(orbits[m].period) +
                          " meets the seed segment at " + point_string(p));
      }
    }
    const double s = data->angle_sum(orb);
    const double r = dist_to_pi_z(s);
    if (r < options.margin_target) {
      // Gap to the segment and the orbits already handled.
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& p : orb) {
        gap = std::min(gap, data->base_angle(p) / data->angle_scale);
        for (std::size_t j = 0; j < m; ++j)
          for (const auto& q : points[j]) gap = std::min(gap, torus_dist(p, q));
      }
      const double radius = gap / 2.0;
      const double index = static_cast<double>(m + 1);
      const double cap = 0.9 * epsilon / (4.0 * index * index) * radius / (1.0 + radius);
      const double needed = (options.margin_target - r) / static_cast<double>(orb.size());
      const double k_nearest = std::round(s / std::numbers::pi);
      const double sign = (s - std::numbers::pi * k_nearest) >= 0.0 ? 1.0 : -1.0;
      ShearRotationData::Bump bump;
      bump.orbit_index = m + 1;
      bump.orbit = orb;
      bump.radius = radius;
      bump.height = sign * std::min(cap, needed);
      data->bumps.push_back(std::move(bump));
    }
  }
  data->orbits_checked = points.size();
  for (std::size_t m = 0; m < points.size(); ++m) {
    const double r = dist_to_pi_z(data->angle_sum(points[m]));
    if (r < data->margin) {
      data->margin = r;
      data->margin_orbit = m + 1;
    }
  }
  if (points.empty()) data->margin = 0.0;

  double max_angle = 0.0;
  for (const auto& g : uniform_grid(f.dim(), f.dim() == 2 ? 64 : 8))
    max_angle = std::max(max_angle, std::abs(data->angle(g)));
  data->max_angle = max_angle;

  double lip = data->angle_scale;
  for (const auto& b : data->bumps) lip += std::abs(b.height) / b.radius;
  CocycleSpec c = CocycleSpec::shear_rotation(std::move(data));
  // A moves by at most |delta angle|, A^{-1} by sqrt(1 + eps^2) |delta angle|
  // because of its -R^{-1} eps e1 column.
  c.set_holder_claim(1.0, (1.0 + std::sqrt(1.0 + epsilon * epsilon)) * lip);
  return c;
}

CocycleSpec build_conjugated_conformal(ConjugatorField conjugator, ScalarField lambda,
                                       ScalarField theta, const ToralAutomorphism& f,
                                       int validation_grid) {
  const auto grid = uniform_grid(f.dim(), validation_grid);
  for (const auto& x : grid) {
    const Matrix c = conjugator(x);
    const Vector s = singular_values(c);
    if (!(s(s.size() - 1) > 1e-10 * s(0))) {
      throw DomainError("conjugating field is singular at " + point_string(x));
    }
    if (!(lambda(x) > 0.0)) throw DomainError("scale field must be positive at " + point_string(x));
  }
  CocycleSpec c = CocycleSpec::conjugated_conformal(std::move(conjugator), std::move(lambda),
                                                    std::move(theta), f);
  // Empirical Lipschitz constant on neighboring grid pairs, with headroom.
  double worst = 0.0;
  const double h = 1.0 / validation_grid;
  for (const auto& x : grid) {
    for (Eigen::Index axis = 0; axis < f.dim(); ++axis) {
      Vector shifted = x.coords();
      shifted(axis) += h;
      const TorusPoint y(shifted);
      const Matrix a = c.value(x);
      const Matrix b = c.value(y);
      const double num = op_norm(a - b) + op_norm(a.inverse() - b.inverse());
      worst = std::max(worst, num / h);
    }
  }
  c.set_holder_claim(1.0, 1.5 * worst);
  return c;
}

HolderFit holder_estimate(const CocycleSpec& c, int sample_pairs, std::mt19937_64& rng,
                          double min_dist, double max_dist) {
  if (sample_pairs < 100) throw DomainError("holder_estimate needs at least 100 pairs");
  std::uniform_real_distribution<double> log_r(std::log(min_dist), std::log(max_dist));
  std::normal_distribution<double> gauss;
  Eigen::Index k = 2;
  if (const auto* cc = std::get_if<ConjugatedConformalCocycle>(&c.payload())) k = cc->base->dim();
  if (const auto* sr = std::get_if<std::shared_ptr<const ShearRotationData>>(&c.payload()))
    k = (*sr)->seed.dim();

  std::vector<double> xs, ys;
  HolderFit fit;
  double scale = 0.0;
  for (int i = 0; i < sample_pairs; ++i) {
    const TorusPoint x = random_point(k, rng);
    Vector dir(k);
    for (Eigen::Index j = 0; j < k; ++j) dir(j) = gauss(rng);
    const double r = std::exp(log_r(rng));
    const TorusPoint y(Vector(x.coords() + r * dir.normalized()));
    const Matrix a = evaluate(c, x);
    const Matrix b = evaluate(c, y);
    scale = std::max(scale, op_norm(a));
    const double num = op_norm(a - b) + op_norm(a.inverse() - b.inverse());
    const double d = torus_dist(x, y);
    if (num > 0.0 && d > 0.0) {
      xs.push_back(std::log(d));
      ys.push_back(std::log(num));
      fit.max_ratio = std::max(fit.max_ratio, num / std::pow(d, c.holder_beta()));
    }
  }
  // Differences at rounding level are indistinguishable from a constant field.
  std::size_t significant = 0;
  for (double y : ys)
    if (y > std::log(1e-13 * std::max(1.0, scale))) ++significant;
  if (significant < 2) {
    fit.constant = true;
    fit.beta = std::numeric_limits<double>::infinity();
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.beta = sxy / sxx;
  fit.log_const = my - fit.beta * mx;
  fit.pairs_used = xs.size();
  return fit;
}

// --- Grid payloads ---------------------------------------------------------------

void write_grid_payload(const std::filesystem::path& path, const GridCocycle& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open grid payload for writing: " + path.string());
  out.write(kGridMagic, sizeof(kGridMagic));
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(grid.dim),
                                   static_cast<std::uint32_t>(grid.resolution)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& m : grid.values) {
    for (int i = 0; i < grid.dim; ++i)
      for (int j = 0; j < grid.dim; ++j) {
        const double v = m(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }
}

GridCocycle read_grid_payload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open grid payload: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) {
    throw Error("grid payload has a bad header: " + path.string());
  }
  std::uint32_t header[2];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  GridCocycle g;
  g.dim = static_cast<int>(header[0]);
  g.resolution = static_cast<int>(header[1]);
  if (g.dim < 2 || g.resolution < 1) throw Error("grid payload header out of range");
  g.values.assign(static_cast<std::size_t>(g.resolution) * g.resolution, Matrix(g.dim, g.dim));
  for (auto& m : g.values) {
    for (int i = 0; i < g.dim; ++i)
      for (int j = 0; j < g.dim; ++j) in.read(reinterpret_cast<char*>(&m(i, j)), sizeof(double));
  }
  if (!in) throw Error("grid payload truncated: " + path.string());
  return g;
}

GridCocycle sample_to_grid(const CocycleSpec& c, int resolution) {
  GridCocycle g;
  g.resolution = resolution;
  g.dim = c.dim();
  for (const auto& x : uniform_grid(2, resolution)) g.values.push_back(evaluate(c, x));
  return g;
}

}  // namespace cocycle
