#pragma once

// Invariant conformal structures: orbit structure sets, recovery by
// circumcenters, holonomies along stable/unstable leaves, adapted metrics.

#include "cocycle/cocycle.hpp"
#include "cocycle/conformal.hpp"
#include "cocycle/linalg.hpp"
#include "cocycle/torus.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cocycle {

using StructureSeed = std::function<Matrix(const TorusPoint&)>;

struct OrbitStructureSet {
  std::vector<Matrix> structures;  // n = -depth, ..., depth
  std::vector<double> distortion;  // K_F(x, n) for the same n
  int depth = 0;
  std::optional<double> diameter;  // filled when requested
};

/// {pullback(F^n_x, tau0(f^n x)) : |n| <= depth}; tau0 defaults to Id.
OrbitStructureSet orbit_structure_set(const CocycleSpec& c, const ToralAutomorphism& f,
                                      const TorusPoint& x, int depth,
                                      const StructureSeed& tau0 = {}, bool with_diameter = true);

struct StructureField {
  int resolution = 0;
  std::vector<TorusPoint> grid;  // uniform_grid(k, resolution)
  std::vector<Matrix> values;
  std::vector<double> radii;  // circumradius of each orbit set
  int depth = 0;
  double tol = 0.0;
  double covering_radius = 0.0;
};

struct GrowthWitness {
  TorusPoint x;
  long n = 0;
  double k = 0.0;
};

/// Raised when sampled distortion exceeds the configured bound.
class RecoveryRefused : public PreconditionError {
 public:
  RecoveryRefused(const std::string& what, GrowthWitness w)
      : PreconditionError(what), witness(std::move(w)) {}
  GrowthWitness witness;
};

struct RecoveryOptions {
  double k_bound = 100.0;
  // Growth probe: points of the orbit of probe_seed, each tested for |n| <= probe_length.
  std::optional<TorusPoint> probe_seed;  // default_seed(k)
  int probe_points = 64;
  int probe_length = 0;  // 0: 4 * depth
  int exact_stride = 16;  // every exact_stride-th grid point gets a fresh circumcenter at f x
  int convergence_stride = 16;
  int workers = 1;
  StructureSeed tau0;
  conformal::CircumcenterMethod method = conformal::CircumcenterMethod::tangent_ball;
};

struct RecoveryReport {
  StructureField field;
  double invariance_residual = 0.0;  // sup over grid of dist(tau(x), F*_x tau(f x))
  bool grid_closed = true;           // f maps the grid into itself
  double exact_residual = 0.0;       // same, tau(f x) from a fresh circumcenter
  std::size_t exact_samples = 0;
  bool holder_constant = false;  // field constant to rounding
  double holder_beta = 0.0;
  double holder_log_const = 0.0;
  std::size_t holder_pairs = 0;
  double radius_min = 0.0;
  double radius_mean = 0.0;
  double radius_max = 0.0;
  double depth_movement = 0.0;  // max dist(tau_depth, tau_{depth/2}) on a subsample
  double max_k = 1.0;           // largest K_F seen in orbit sets and probes
};

/// tau(x) = circumcenter of the orbit structure set at each grid point.
/// Throws RecoveryRefused when sampled distortion exceeds options.k_bound.
RecoveryReport recover_invariant_structure(const CocycleSpec& c, const ToralAutomorphism& f,
                                           int resolution, int depth, double tol,
                                           const RecoveryOptions& options = {});

// --- Holonomies -----------------------------------------------------------------

enum class Leaf { stable, unstable };

struct HolonomyResult {
  Matrix h;
  Leaf leaf = Leaf::stable;
  double delta = 0.0;
  int steps = 0;
  std::vector<double> trace;       // |H_n - Id|
  std::vector<double> increments;  // |H_{n+1} - H_n|
  std::vector<double> lemma_products;  // |(F^i_x)^{-1}| |F^i_y|
  double distance_to_identity = 0.0;
};

/// lim (F^n_x)^{-1} F^n_y for y = x + delta u^s (stable) or the dual limit
/// with F^{-1} for y = x + delta u^u (unstable). Throws ConvergenceError with
/// the tail of the trace if the increments are not below cauchy_tol by n_max.
HolonomyResult holonomy_limit(const CocycleSpec& c, const ToralAutomorphism& f,
                              const TorusPoint& x, double delta, Leaf leaf = Leaf::stable,
                              int n_max = 400, double cauchy_tol = 1e-14);

/// Holonomy from x + d_from u to x + d_to u along the leaf through x.
HolonomyResult holonomy_between(const CocycleSpec& c, const ToralAutomorphism& f,
                                const TorusPoint& x, double d_from, double d_to,
                                Leaf leaf = Leaf::stable, int n_max = 400,
                                double cauchy_tol = 1e-14);

struct HolonomyLadder {
  std::vector<double> deltas;
  std::vector<double> norms;  // max over base points of |H - Id|
  double beta_fit = 0.0;
  double constant = 0.0;  // max |H - Id| / delta^beta
  double beta = 1.0;      // exponent used for the constant
  double decay_exponent = 0.0;  // fitted log-slope of the increments
  double c3 = 0.0;  // max_i |(F^i_x)^{-1}| |F^i_y| e^{-3 i eps}
  double epsilon = 0.0;
  double kappa = 0.0;
  std::string warning;  // set when 3 eps >= kappa beta
};

HolonomyLadder holonomy_ladder(const CocycleSpec& c, const ToralAutomorphism& f,
                               const std::vector<TorusPoint>& base_points,
                               const std::vector<double>& deltas, double beta, double epsilon,
                               Leaf leaf = Leaf::stable, int n_max = 400);

// --- Adapted metrics ------------------------------------------------------------

struct AdaptedMetricOptions {
  int window = 10;
  double max_c_eps = 1e8;
  std::optional<Vector> reference;  // u at x; defaults to e_1
};

struct AdaptedMetricTable {
  std::vector<int> k;
  std::vector<Matrix> gram;      // Gram matrix of |.|_{x_k}
  std::vector<double> one_step;  // max/min of |F_{x_k} v|_{x_{k+1}} over |v|_{x_k} = 1
  double epsilon = 0.0;
  int truncation = 0;
  double c_eps = 1.0;  // max over window, |m| <= 2M of K e^{-eps |m|}
  double m_eps = 1.0;
  double tail_bound = 0.0;     // 2 C^2 e^{-(M+1) eps} / (1 - e^{-eps}), relative to |v|^2
  double doubling_gap = 0.0;   // max over k of lambda_max(G_{2M} - G_M)
  bool tail_certified = false;
  bool ratios_pass = false;
  bool comparison_pass = false;  // |v| <= |v|_k <= M_eps |v|
  double max_ratio = 1.0;
};

/// Truncated series metrics along the orbit of a non-periodic x.
/// Throws PreconditionError for rational x or when K e^{-eps|m|} exceeds max_c_eps.
AdaptedMetricTable adapted_metric(const CocycleSpec& c, const ToralAutomorphism& f,
                                  const TorusPoint& x, double epsilon, int truncation,
                                  const AdaptedMetricOptions& options = {});

}  // namespace cocycle
