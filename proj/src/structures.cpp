#include "cocycle/structures.hpp"

#include "cocycle/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cocycle {

namespace {

namespace cf = conformal;

std::string point_string(const TorusPoint& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.dim(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

Matrix seed_value(const StructureSeed& tau0, const TorusPoint& x, int d) {
  if (!tau0) return Matrix::Identity(d, d);
  return cf::normalize(tau0(x));
}

void rescale(Matrix& p) {
  const double n = p.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("orbit product degenerated");
  p /= n;
}

double slope(const std::vector<double>& xs, const std::vector<double>& ys, double* intercept) {
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
  const double s = sxx > 0 ? sxy / sxx : 0.0;
  if (intercept) *intercept = my - s * mx;
  return s;
}

// Index of x in uniform_grid(k, res), or -1 if x is not a grid point.
std::ptrdiff_t grid_index(const TorusPoint& x, int res) {
  std::ptrdiff_t idx = 0;
  for (Eigen::Index j = 0; j < x.dim(); ++j) {
    const double u = x[j] * res;
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-9) return -1;
    idx = idx * res + (static_cast<std::ptrdiff_t>(r) % res);
  }
  return idx;
}

// Largest K_F(x, n), |n| <= length, along the forward and backward orbit.
GrowthWitness max_growth(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x,
                         int length) {
  const int d = c.dim();
  GrowthWitness best{x, 0, 1.0};
  for (int sign : {1, -1}) {
    LogScaledProduct fwd(d), inv(d);
    TorusPoint y = x;
    for (int n = 1; n <= length; ++n) {
      Matrix a;
      if (sign > 0) {
        a = evaluate(c, y);
        y = f.step(y);
        fwd.left_multiply(a);
        inv.right_multiply(a.inverse());
      } else {
        y = f.step_back(y);
        a = evaluate(c, y);
        fwd.left_multiply(a.inverse());
        inv.right_multiply(a);
      }
      fwd.renormalize();
      inv.renormalize();
      const double k = std::exp(std::max(0.0, fwd.log_norm() + inv.log_norm()));
      if (k > best.k) best = GrowthWitness{x, sign * n, k};
    }
  }
  return best;
}

}  // namespace

OrbitStructureSet orbit_structure_set(const CocycleSpec& c, const ToralAutomorphism& f,
                                      const TorusPoint& x, int depth, const StructureSeed& tau0,
                                      bool with_diameter) {
  if (depth < 1) throw DomainError("orbit_structure_set needs depth >= 1");
  const int d = c.dim();
  OrbitStructureSet out;
  out.depth = depth;
  const auto count = static_cast<std::size_t>(2 * depth + 1);
  out.structures.resize(count);
  out.distortion.resize(count);
  const auto mid = static_cast<std::size_t>(depth);
  out.structures[mid] = seed_value(tau0, x, d);
  out.distortion[mid] = 1.0;

  Matrix p = Matrix::Identity(d, d);
  TorusPoint y = x;
  for (int n = 1; n <= depth; ++n) {
    p = evaluate(c, y) * p;
    y = f.step(y);
    rescale(p);
    out.structures[mid + n] = cf::pullback(p, seed_value(tau0, y, d));
    out.distortion[mid + n] = distortion(p);
  }
  p.setIdentity();
  y = x;
  for (int n = 1; n <= depth; ++n) {
    y = f.step_back(y);
    p = evaluate(c, y).inverse() * p;
    rescale(p);
    out.structures[mid - n] = cf::pullback(p, seed_value(tau0, y, d));
    out.distortion[mid - n] = distortion(p);
  }
  if (with_diameter) {
    double diam = 0.0;
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j)
        diam = std::max(diam, cf::dist(out.structures[i], out.structures[j]));
    out.diameter = diam;
  }
  return out;
}

RecoveryReport recover_invariant_structure(const CocycleSpec& c, const ToralAutomorphism& f,
                                           int resolution, int depth, double tol,
                                           const RecoveryOptions& options) {
  if (resolution < 2) throw DomainError("recovery grid resolution must be >= 2");
  if (depth < 2) throw DomainError("recovery depth must be >= 2");
  const Eigen::Index k = f.dim();
  RecoveryReport report;
  report.field.resolution = resolution;
  report.field.grid = uniform_grid(k, resolution);
  report.field.depth = depth;
  report.field.tol = tol;
  report.field.covering_radius = std::sqrt(static_cast<double>(k)) / (2.0 * resolution);
  const auto& grid = report.field.grid;
  const std::size_t n = grid.size();

  // Growth probe along the reference orbit.
  {
    const int length = options.probe_length > 0 ? options.probe_length : 4 * depth;
    const auto probes =
        f.orbit(options.probe_seed ? *options.probe_seed : default_seed(k), options.probe_points);
    std::vector<GrowthWitness> w(probes.size());
    parallel_for(probes.size(), options.workers,
                 [&](std::size_t i) { w[i] = max_growth(c, f, probes[i], length); });
    for (const auto& g : w) {
      report.max_k = std::max(report.max_k, g.k);
      if (g.k > options.k_bound) {
        throw RecoveryRefused("distortion K = " + std::to_string(g.k) + " at x = " +
                                  point_string(g.x) + ", n = " + std::to_string(g.n) +
                                  " exceeds the bound " + std::to_string(options.k_bound) +
                                  "; orbit structure sets are not uniformly bounded",
                              g);
      }
    }
  }

  auto& values = report.field.values;
  auto& radii = report.field.radii;
  values.assign(n, Matrix());
  radii.assign(n, 0.0);
  std::vector<GrowthWitness> witness(n);
  std::vector<double> movement(n, -1.0);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const auto set = orbit_structure_set(c, f, grid[i], depth, options.tau0, false);
    const auto it = std::max_element(set.distortion.begin(), set.distortion.end());
    witness[i] = GrowthWitness{grid[i], static_cast<long>(it - set.distortion.begin()) - depth, *it};
    if (*it > options.k_bound) return;
    const auto cc = cf::circumcenter(set.structures, tol, options.method);
    values[i] = cc.center;
    radii[i] = cc.radius;
    if (options.convergence_stride > 0 && i % static_cast<std::size_t>(options.convergence_stride) == 0) {
      const int half = depth / 2;
      std::vector<Matrix> inner(set.structures.begin() + (depth - half),
                                set.structures.begin() + (depth + half + 1));
      movement[i] = cf::dist(cc.center, cf::circumcenter(inner, tol, options.method).center);
    }
  });
  for (const auto& w : witness) {
    report.max_k = std::max(report.max_k, w.k);
  }
  for (const auto& w : witness) {
    if (w.k > options.k_bound) {
      throw RecoveryRefused("distortion K = " + std::to_string(w.k) + " at x = " +
                                point_string(w.x) + ", n = " + std::to_string(w.n) +
                                " exceeds the bound " + std::to_string(options.k_bound),
                            w);
    }
  }
  for (double m : movement) report.depth_movement = std::max(report.depth_movement, m);

  // Invariance residual. Integer matrices map the uniform grid into itself,
  // so tau(f x) is read off the grid without interpolation.
  std::vector<double> residual(n, 0.0);
  std::vector<double> exact(n, -1.0);
  std::vector<char> closed(n, 1);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const TorusPoint fx = f.step(grid[i]);
    const Matrix a = evaluate(c, grid[i]);
    const std::ptrdiff_t j = grid_index(fx, resolution);
    Matrix target;
    if (j >= 0) {
      target = values[static_cast<std::size_t>(j)];
    } else {
      closed[i] = 0;
      target = cf::circumcenter(
                   orbit_structure_set(c, f, fx, depth, options.tau0, false).structures, tol,
                   options.method)
                   .center;
    }
    residual[i] = cf::dist(values[i], cf::pullback(a, target));
    if (options.exact_stride > 0 && i % static_cast<std::size_t>(options.exact_stride) == 0) {
      const auto fresh = cf::circumcenter(
          orbit_structure_set(c, f, fx, depth, options.tau0, false).structures, tol, options.method);
      exact[i] = cf::dist(values[i], cf::pullback(a, fresh.center));
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    report.invariance_residual = std::max(report.invariance_residual, residual[i]);
    report.grid_closed = report.grid_closed && closed[i];
    if (exact[i] >= 0) {
      report.exact_residual = std::max(report.exact_residual, exact[i]);
      ++report.exact_samples;
    }
  }

  report.radius_min = *std::min_element(radii.begin(), radii.end());
  report.radius_max = *std::max_element(radii.begin(), radii.end());
  double sum = 0.0;
  for (double r : radii) sum += r;
  report.radius_mean = sum / static_cast<double>(n);

  // Hoelder fit over grid pairs at distance in [h, 10 h] along four directions (k = 2).
  if (k == 2) {
    const double h = 1.0 / resolution;
    const int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    std::vector<double> xs, ys;
    for (int a = 0; a < resolution; ++a) {
      for (int b = 0; b < resolution; ++b) {
        const std::size_t i = static_cast<std::size_t>(a) * resolution + b;
        for (const auto& dir : dirs) {
          for (int t = 1; t <= 10; ++t) {
            const double len = t * h * std::hypot(dir[0], dir[1]);
            if (len > 10.0 * h) break;
            const int a2 = ((a + t * dir[0]) % resolution + resolution) % resolution;
            const int b2 = ((b + t * dir[1]) % resolution + resolution) % resolution;
            const std::size_t j = static_cast<std::size_t>(a2) * resolution + b2;
            const double dd = cf::dist(values[i], values[j]);
            if (dd > 10.0 * tol) {
              xs.push_back(std::log(len));
              ys.push_back(std::log(dd));
            }
          }
        }
      }
    }
    report.holder_pairs = xs.size();
    if (xs.size() < 2) {
      report.holder_constant = true;
      report.holder_beta = std::numeric_limits<double>::infinity();
    } else {
      report.holder_beta = slope(xs, ys, &report.holder_log_const);
    }
  }
  return report;
}

// --- Holonomies ------------------------------------------------------------------

HolonomyResult holonomy_between(const CocycleSpec& c, const ToralAutomorphism& f,
                                const TorusPoint& x, double d_from, double d_to, Leaf leaf,
                                int n_max, double cauchy_tol) {
  const int d = c.dim();
  const Matrix id = Matrix::Identity(d, d);
  HolonomyResult out;
  out.leaf = leaf;
  out.delta = d_to - d_from;
  Matrix h = id;
  Matrix p = id;  // (F^n_y)^{-1}, or its dual along the unstable leaf
  Matrix q = id;  // F^n_z, or its dual
  TorusPoint xn = x;
  int quiet = 0;
  for (int n = 0; n < n_max; ++n) {
    Matrix inc;
    if (leaf == Leaf::stable) {
      const TorusPoint y = stable_neighbor_iterate(f, xn, d_from, n);
      const TorusPoint z = stable_neighbor_iterate(f, xn, d_to, n);
      const Matrix ay = evaluate(c, y);
      const Matrix az = evaluate(c, z);
      const Matrix ay_inv = ay.inverse();
      inc = p * ay_inv * (az - ay) * q;
      p = p * ay_inv;
      q = az * q;
      xn = f.step(xn);
    } else {
      xn = f.step_back(xn);
      const TorusPoint y = unstable_neighbor_iterate(f, xn, d_from, n + 1);
      const TorusPoint z = unstable_neighbor_iterate(f, xn, d_to, n + 1);
      const Matrix ay = evaluate(c, y);
      const Matrix az = evaluate(c, z);
      const Matrix az_inv = az.inverse();
      inc = p * (ay - az) * az_inv * q;
      p = p * ay;
      q = az_inv * q;
    }
    h += inc;
    const double step = op_norm(inc);
    out.increments.push_back(step);
    out.trace.push_back(op_norm(h - id));
    out.lemma_products.push_back(op_norm(p) * op_norm(q));
    out.steps = n + 1;
    quiet = step <= cauchy_tol * std::max(1.0, op_norm(h)) ? quiet + 1 : 0;
    if (quiet >= 2) {
      out.h = h;
      out.distance_to_identity = out.trace.back();
      return out;
    }
  }
  std::ostringstream os;
  os << "holonomy trace not Cauchy within " << n_max << " steps; last increments:";
  const std::size_t from = out.increments.size() > 5 ? out.increments.size() - 5 : 0;
  for (std::size_t i = from; i < out.increments.size(); ++i) os << ' ' << out.increments[i];
  throw ConvergenceError(os.str());
}

HolonomyResult holonomy_limit(const CocycleSpec& c, const ToralAutomorphism& f,
                              const TorusPoint& x, double delta, Leaf leaf, int n_max,
                              double cauchy_tol) {
  return holonomy_between(c, f, x, 0.0, delta, leaf, n_max, cauchy_tol);
}

HolonomyLadder holonomy_ladder(const CocycleSpec& c, const ToralAutomorphism& f,
                               const std::vector<TorusPoint>& base_points,
                               const std::vector<double>& deltas, double beta, double epsilon,
                               Leaf leaf, int n_max) {
  if (deltas.size() < 2 || base_points.empty()) {
    throw DomainError("holonomy ladder needs >= 2 deltas and >= 1 base point");
  }
  HolonomyLadder out;
  out.deltas = deltas;
  out.beta = beta;
  out.epsilon = epsilon;
  out.kappa = f.kappa();
  if (3.0 * epsilon >= out.kappa * beta) {
    out.warning = "3 eps >= kappa beta: holonomy convergence is not guaranteed";
  }
  out.decay_exponent = -std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (double delta : deltas) {
    double worst = 0.0;
    for (const auto& x : base_points) {
      const auto r = holonomy_limit(c, f, x, delta, leaf, n_max);
      worst = std::max(worst, r.distance_to_identity);
      for (std::size_t i = 0; i < r.lemma_products.size(); ++i) {
        out.c3 = std::max(out.c3, r.lemma_products[i] * std::exp(-3.0 * epsilon * (i + 1.0)));
      }
      if (delta == deltas.front()) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < r.increments.size(); ++i) {
          if (r.increments[i] > 1e-300 && r.increments[i] > 1e-14 * r.increments.front()) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(r.increments[i]));
          }
        }
        if (xs.size() >= 3) out.decay_exponent = std::max(out.decay_exponent, slope(xs, ys, nullptr));
      }
    }
    out.norms.push_back(worst);
    out.constant = std::max(out.constant, worst / std::pow(delta, beta));
    if (worst > 0) {
      lx.push_back(std::log(delta));
      ly.push_back(std::log(worst));
    }
  }
  out.beta_fit = lx.size() >= 2 ? slope(lx, ly, nullptr) : std::numeric_limits<double>::infinity();
  return out;
}

// --- Adapted metrics --------------------------------------------------------------

AdaptedMetricTable adapted_metric(const CocycleSpec& c, const ToralAutomorphism& f,
                                  const TorusPoint& x, double epsilon, int truncation,
                                  const AdaptedMetricOptions& options) {
  if (!(epsilon > 0.0)) throw DomainError("adapted metrics need eps > 0");
  if (truncation < 1) throw DomainError("adapted metrics need truncation M >= 1");
  for (std::int64_t q = 1; q <= 10000; ++q) {
    bool rational = true;
    for (Eigen::Index j = 0; j < x.dim() && rational; ++j) {
      const double u = x[j] * static_cast<double>(q);
      rational = std::abs(u - std::round(u)) < 1e-9;
    }
    if (rational) {
      throw PreconditionError("adapted metrics need a non-periodic point; x = " + point_string(x) +
                              " is rational with denominator " + std::to_string(q));
    }
  }
  const int d = c.dim();
  const int w = options.window;
  const int m2 = 2 * truncation;
  const int reach = w + m2 + 1;
  // A(x_j) for j in [-reach, reach].
  std::vector<Matrix> a(static_cast<std::size_t>(2 * reach + 1));
  auto at = [&](int j) -> Matrix& { return a[static_cast<std::size_t>(j + reach)]; };
  {
    TorusPoint y = x;
    for (int j = 0; j <= reach; ++j) {
      at(j) = evaluate(c, y);
      y = f.step(y);
    }
    y = x;
    for (int j = -1; j >= -reach; --j) {
      y = f.step_back(y);
      at(j) = evaluate(c, y);
    }
  }

  Vector u = options.reference ? *options.reference : Vector(Vector::Unit(d, 0));
  u.normalize();

  AdaptedMetricTable out;
  out.epsilon = epsilon;
  out.truncation = truncation;
  std::vector<Matrix> gram_2m;
  int worst_k = 0, worst_m = 0;
  double worst_kv = 1.0;
  for (int k = -w; k <= w; ++k) {
    // u_k = F^k_x u / |.|
    Vector uk = u;
    if (k >= 0) {
      for (int j = 0; j < k; ++j) uk = (at(j) * uk).normalized();
    } else {
      for (int j = -1; j >= k; --j) uk = at(j).partialPivLu().solve(uk).normalized();
    }
    Matrix g = Matrix::Identity(d, d);  // m = 0 term, |u_k| = 1
    Matrix g2 = g;
    for (int sign : {1, -1}) {
      Matrix p = Matrix::Identity(d, d);
      for (int m = 1; m <= m2; ++m) {
        if (sign > 0) {
          p = at(k + m - 1) * p;
        } else {
          p = at(k - m).partialPivLu().solve(p);
        }
        rescale(p);
        const double denom = (p * uk).squaredNorm() * std::exp(3.0 * m * epsilon);
        const Matrix term = p.transpose() * p / denom;
        if (m <= truncation) g += term;
        g2 += term;
        const double kv = distortion(p) * std::exp(-epsilon * m);
        if (kv > out.c_eps) {
          out.c_eps = kv;
          worst_k = k;
          worst_m = sign * m;
          worst_kv = distortion(p);
        }
      }
    }
    out.k.push_back(k);
    out.gram.push_back(cf::symmetrize(g));
    gram_2m.push_back(cf::symmetrize(g2));
  }
  if (out.c_eps > options.max_c_eps) {
    throw PreconditionError("K_F(x_k, m) e^{-eps|m|} = " + std::to_string(out.c_eps) + " at k = " +
                            std::to_string(worst_k) + ", m = " + std::to_string(worst_m) +
                            " (K = " + std::to_string(worst_kv) + ") exceeds " +
                            std::to_string(options.max_c_eps));
  }
  const double q = std::exp(-epsilon);
  out.m_eps = out.c_eps * std::sqrt((1.0 + q) / (1.0 - q));
  out.tail_bound = 2.0 * out.c_eps * out.c_eps * std::exp(-(truncation + 1.0) * epsilon) / (1.0 - q);

  out.comparison_pass = true;
  for (std::size_t i = 0; i < out.gram.size(); ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(out.gram[i]);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(d - 1);
    out.comparison_pass = out.comparison_pass && lo >= 1.0 - 1e-12 &&
                          hi <= out.m_eps * out.m_eps * (1.0 + 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> gap(cf::symmetrize(Matrix(gram_2m[i] - out.gram[i])));
    out.doubling_gap = std::max(out.doubling_gap, gap.eigenvalues()(d - 1));
  }
  out.tail_certified = out.doubling_gap <= out.tail_bound * (1.0 + 1e-9) + 1e-15;

  // One-step ratio: max/min of |F v|_{k+1} over |v|_k = 1.
  const double slack = std::sqrt((1.0 + out.tail_bound) / std::max(1e-300, 1.0 - out.tail_bound));
  out.ratios_pass = true;
  for (std::size_t i = 0; i + 1 < out.gram.size(); ++i) {
    const Matrix& fk = at(out.k[i]);
    const Matrix lhs = cf::symmetrize(Matrix(fk.transpose() * out.gram[i + 1] * fk));
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(lhs, out.gram[i]);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(d - 1);
    const double ratio = std::sqrt(hi / lo);
    out.one_step.push_back(ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
    out.ratios_pass =
        out.ratios_pass && ratio <= std::exp(3.0 * epsilon) * slack * (1.0 + 1e-12) &&
        1.0 / ratio >= std::exp(-3.0 * epsilon) / (slack * (1.0 + 1e-12));
  }
  return out;
}

}  // namespace cocycle
