#include "cocycle/livsic.hpp"

#include "cocycle/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cocycle {

namespace {

namespace cf = conformal;

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

// Affine fit v ~ c + g . (z - q) over the given orbit points; returns c.
double local_linear(const TorusPoint& q, const std::vector<std::size_t>& near,
                    const std::vector<TorusPoint>& pts, const std::vector<double>& vals) {
  Matrix design(static_cast<Eigen::Index>(near.size()), 3);
  Vector rhs(static_cast<Eigen::Index>(near.size()));
  for (std::size_t r = 0; r < near.size(); ++r) {
    const Vector dz = torus_displacement(q, pts[near[r]]);
    const auto row = static_cast<Eigen::Index>(r);
    design(row, 0) = 1.0;
    design(row, 1) = dz(0);
    design(row, 2) = dz(1);
    rhs(row) = vals[near[r]];
  }
  const Vector coef = design.colPivHouseholderQr().solve(rhs);
  return coef(0);
}

}  // namespace

std::vector<double> birkhoff_log_potential(const PositiveField& a, const ToralAutomorphism& f,
                                           const TorusPoint& seed, long length) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(length));
  double acc = 0.0;
  TorusPoint z = seed;
  for (long j = 0; j < length; ++j) {
    out.push_back(acc);
    const double v = a(z);
    if (!(v > 0.0)) throw DomainError("Livsic data must be positive along the orbit");
    acc += std::log(v);
    z = f.step(z);
  }
  return out;
}

LivsicResult livsic_solve(const PositiveField& a, const ToralAutomorphism& f,
                          const LivsicOptions& options) {
  if (f.dim() != 2) throw DomainError("livsic_solve supports the 2-torus");
  if (options.orbit_length < 100) throw DomainError("orbit length must be >= 100");
  LivsicResult out;
  out.resolution = options.resolution;
  out.orbit_length = options.orbit_length;

  const auto orbits = periodic_orbits_up_to(f, options.max_period);
  out.periodic_orbits_checked = orbits.size();
  for (const auto& orb : orbits) {
    double log_product = 0.0;
    for (const auto& p : orb.orbit) {
      const double v = a(p.to_torus());
      if (!(v > 0.0)) throw DomainError("Livsic data must be positive at periodic points");
      log_product += std::log(v);
    }
    const double product = std::exp(log_product);
    if (std::abs(product - 1.0) > options.obstruction_tol) {
      out.obstruction = LivsicObstruction{orb, product};
      return out;
    }
  }

  const TorusPoint seed = options.seed ? *options.seed : default_seed(2);
  const auto values = birkhoff_log_potential(a, f, seed, options.orbit_length);
  const auto points = f.orbit(seed, options.orbit_length);
  const int buckets = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(points.size()) / 4.0)));
  const TorusPointIndex index(points, buckets);

  out.grid = uniform_grid(2, options.resolution);
  const std::size_t n = out.grid.size();
  out.log_phi.assign(n, 0.0);
  std::vector<double> gap(n, 0.0);
  const double r0 = std::sqrt(options.min_neighbors / (3.14159 * static_cast<double>(points.size())));
  parallel_for(n, options.workers, [&](std::size_t i) {
    const TorusPoint& q = out.grid[i];
    const auto nearest = static_cast<std::size_t>(index.nearest(q));
    gap[i] = torus_dist(q, points[nearest]);
    if (gap[i] > options.max_radius) return;
    if (options.transfer == LivsicTransfer::nearest) {
      out.log_phi[i] = values[nearest];
      return;
    }
    double r = std::max(r0, gap[i]);
    std::vector<std::size_t> near;
    while (true) {
      near = index.within(q, r);
      if (static_cast<int>(near.size()) >= options.min_neighbors || r >= options.max_radius) break;
      r = std::min(options.max_radius, 1.5 * r);
    }
    out.log_phi[i] = near.size() >= 3 ? local_linear(q, near, points, values) : values[nearest];
  });
  for (std::size_t i = 0; i < n; ++i) {
    out.max_gap = std::max(out.max_gap, gap[i]);
    if (gap[i] > options.max_radius) {
      std::ostringstream os;
      os << "grid point (" << out.grid[i][0] << ", " << out.grid[i][1]
         << ") has no orbit point within " << options.max_radius << " (nearest at " << gap[i]
         << "); increase the orbit length T = " << options.orbit_length;
      throw CoverageError(os.str());
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto j = grid_index(f.step(out.grid[i]), options.resolution);
    if (j < 0) throw DomainError("grid is not mapped into itself by the base map");
    const double r =
        std::log(a(out.grid[i])) - out.log_phi[static_cast<std::size_t>(j)] + out.log_phi[i];
    out.residual = std::max(out.residual, std::abs(r));
  }
  return out;
}

IsometryResult renormalize_to_isometry(const CocycleSpec& c, const ToralAutomorphism& f,
                                       const RecoveryReport& report, LivsicOptions options) {
  const int d = c.dim();
  const double inv_d = 1.0 / d;
  auto stretch = [&c, inv_d](const TorusPoint& x) {
    return std::pow(std::abs(evaluate(c, x).determinant()), inv_d);
  };
  options.resolution = report.field.resolution;
  IsometryResult out;
  out.livsic = livsic_solve(stretch, f, options);
  if (out.livsic.obstruction) return out;

  const auto& grid = report.field.grid;
  const auto& tau = report.field.values;
  const std::size_t n = grid.size();
  out.metric.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.metric[i] = tau[i] * std::exp(-2.0 * out.livsic.log_phi[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = grid_index(f.step(grid[i]), report.field.resolution);
    if (j < 0) throw DomainError("grid is not mapped into itself by the base map");
    const Matrix a = evaluate(c, grid[i]);
    const auto ju = static_cast<std::size_t>(j);
    {
      const Matrix lhs = cf::symmetrize(Matrix(a.transpose() * out.metric[ju] * a));
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(lhs, out.metric[i]);
      const double lo = std::sqrt(es.eigenvalues()(0));
      const double hi = std::sqrt(es.eigenvalues()(d - 1));
      out.isometry_residual =
          std::max({out.isometry_residual, std::abs(hi - 1.0), std::abs(lo - 1.0)});
    }
    {
      const Matrix lhs = cf::symmetrize(Matrix(a.transpose() * tau[ju] * a));
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(lhs, tau[i]);
      const double hi = std::sqrt(es.eigenvalues()(d - 1));
      out.conformality_residual =
          std::max(out.conformality_residual, std::abs(hi / stretch(grid[i]) - 1.0));
    }
  }
  return out;
}

}  // namespace cocycle
