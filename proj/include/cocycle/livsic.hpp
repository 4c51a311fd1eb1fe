#pragma once

// Multiplicative cohomological equation a(x) = phi(f x) / phi(x) over the
// base map, and the renormalization of a conformal cocycle to an isometric one.

#include "cocycle/cocycle.hpp"
#include "cocycle/structures.hpp"
#include "cocycle/torus.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cocycle {

using PositiveField = std::function<double(const TorusPoint&)>;

/// No orbit point close enough to a grid point: the orbit is too short.
class CoverageError : public Error {
 public:
  using Error::Error;
};

enum class LivsicTransfer {
  local_linear,  // affine least-squares fit over nearby orbit points
  nearest,       // value of the nearest orbit point
};

struct LivsicOptions {
  int resolution = 128;
  long orbit_length = 1'000'000;
  int max_period = 6;
  double obstruction_tol = 1e-8;  // |product over a periodic orbit - 1|
  std::optional<TorusPoint> seed;  // default_seed(k)
  LivsicTransfer transfer = LivsicTransfer::local_linear;
  int min_neighbors = 12;
  double max_radius = 0.02;
  int workers = 1;
};

struct LivsicObstruction {
  PeriodicOrbit orbit;
  double product = 1.0;
};

struct LivsicResult {
  std::optional<LivsicObstruction> obstruction;
  int resolution = 0;
  std::vector<TorusPoint> grid;
  std::vector<double> log_phi;  // on the grid, log phi(seed) = 0
  double residual = 0.0;        // sup |log a(x) - log phi(f x) + log phi(x)|
  double max_gap = 0.0;         // largest distance from a grid point to its nearest orbit point
  long orbit_length = 0;
  std::size_t periodic_orbits_checked = 0;
};

/// log phi along z_j = f^j seed: partial Birkhoff sums of log a, j = 0..T-1.
std::vector<double> birkhoff_log_potential(const PositiveField& a, const ToralAutomorphism& f,
                                           const TorusPoint& seed, long length);

/// Periodic obstruction check, then a candidate phi on the grid certified by
/// its residual. Throws CoverageError if a grid point has no orbit point
/// within max_radius (k = 2 only).
LivsicResult livsic_solve(const PositiveField& a, const ToralAutomorphism& f,
                          const LivsicOptions& options = {});

struct IsometryResult {
  LivsicResult livsic;  // carries the obstruction when there is one
  std::vector<Matrix> metric;       // Gram matrix tau(x) / phi(x)^2 on the recovery grid
  double isometry_residual = 0.0;   // sup over grid of | |F_x| - 1 | in the new metric (both extremes)
  double conformality_residual = 0.0;  // sup over grid of |F_x|_tau / |det A(x)|^{1/d} - 1
};

/// Conformal stretch a(x) = |det A(x)|^{1/d}, Livsic solution phi, and the
/// metric tau / phi^2. An obstruction means conformal but not isometrizable.
IsometryResult renormalize_to_isometry(const CocycleSpec& c, const ToralAutomorphism& f,
                                       const RecoveryReport& report, LivsicOptions options = {});

}  // namespace cocycle
