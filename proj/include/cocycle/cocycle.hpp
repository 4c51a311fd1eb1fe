#pragma once

// Matrix-valued cocycles x -> A(x) over a toral automorphism f, defining the
// bundle map F(x, v) = (f x, A(x) v) on the trivial bundle T^k x R^d.

#include "cocycle/fields.hpp"
#include "cocycle/linalg.hpp"
#include "cocycle/torus.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace cocycle {

enum class CocycleKind { constant, conformal, conjugated_conformal, shear_rotation, grid };

std::string to_string(CocycleKind kind);
CocycleKind cocycle_kind_from_string(const std::string& name);

struct ConstantCocycle {
  Matrix value;
};

// lambda(x) R(theta(x)), d = 2.
struct ConformalCocycle {
  ScalarField lambda;
  ScalarField theta;
};

// C(f x) lambda(x) R(theta(x)) C(x)^{-1}, d = 2.
struct ConjugatedConformalCocycle {
  ConjugatorField conjugator;
  ScalarField lambda;
  ScalarField theta;
  std::shared_ptr<const ToralAutomorphism> base;
};

// Rotation by a small angle field in the (e1, e2) plane plus a constant shear
// eps * e1 in the third column; padded with the identity when d > 3.
class ShearRotationData {
 public:
  struct Bump {
    std::size_t orbit_index = 0;  // 1-based position in the periodic-orbit ordering
    std::vector<TorusPoint> orbit;
    double radius = 0.0;  // half the gap to earlier orbits and the segment
    double height = 0.0;  // signed
  };

  double epsilon = 0.0;
  int segment_length = 0;
  int max_period = 0;
  int dim = 3;
  TorusPoint seed;
  std::vector<TorusPoint> segment;  // seed, f seed, ..., f^{N-1} seed
  double angle_scale = 0.0;         // eps / (2 diam)
  std::vector<Bump> bumps;

  // Certification over all periodic orbits of period <= max_period.
  std::size_t orbits_checked = 0;
  double margin = 0.0;         // min over orbits of dist(angle sum, pi Z)
  std::size_t margin_orbit = 0;
  double max_angle = 0.0;      // sup of the angle field over the sample grid

  /// Uncorrected angle eps/(2 diam) * dist(x, segment).
  double base_angle(const TorusPoint& x) const;
  /// Corrected angle field.
  double angle(const TorusPoint& x) const;
  double angle_sum(const std::vector<TorusPoint>& orbit) const;
  Matrix matrix_at(double angle) const;
};

// Values on a uniform res x res grid, bilinear interpolation (k = 2).
struct GridCocycle {
  int resolution = 0;
  int dim = 2;
  std::vector<Matrix> values;  // row-major over grid index (i1 slowest)

  Matrix interpolate(const TorusPoint& x) const;
  /// Lipschitz constant of the interpolant: resolution * max neighbor variation.
  double lipschitz_bound() const;
};

class CocycleSpec {
 public:
  using Payload = std::variant<ConstantCocycle, ConformalCocycle, ConjugatedConformalCocycle,
                               std::shared_ptr<const ShearRotationData>, GridCocycle>;

  static CocycleSpec constant(Matrix value);
  static CocycleSpec conformal(ScalarField lambda, ScalarField theta);
  static CocycleSpec conjugated_conformal(ConjugatorField conjugator, ScalarField lambda,
                                          ScalarField theta, const ToralAutomorphism& f);
  static CocycleSpec shear_rotation(std::shared_ptr<const ShearRotationData> data);
  static CocycleSpec grid(GridCocycle grid);

  /// Cocycle x -> X A(x) X^{-1}, i.e. A viewed in the coordinates v' = X v.
  CocycleSpec conjugated_by(const Matrix& x) const;

  CocycleKind kind() const;
  int dim() const { return d_; }
  const Payload& payload() const { return payload_; }
  const std::optional<Matrix>& outer_conjugation() const { return outer_; }

  double holder_beta() const { return beta_; }
  double holder_const() const { return holder_const_; }
  void set_holder_claim(double beta, double constant) {
    beta_ = beta;
    holder_const_ = constant;
  }

  /// A(x) without the degeneracy check.
  Matrix value(const TorusPoint& x) const;

 private:
  explicit CocycleSpec(Payload p, int d) : payload_(std::move(p)), d_(d) {}

  Payload payload_;
  int d_ = 2;
  std::optional<Matrix> outer_;
  std::optional<Matrix> outer_inv_;
  double beta_ = 1.0;
  double holder_const_ = 0.0;
};

/// A(x); throws DomainError naming x when A(x) is numerically singular.
Matrix evaluate(const CocycleSpec& c, const TorusPoint& x);

/// F^n_x (negative n gives (F^{|n|}_{f^n x})^{-1}). Throws DomainError if the
/// product leaves the representable range; use the log-scaled routines then.
Matrix compose(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x, long n);

struct ShearRotationOptions {
  std::optional<TorusPoint> seed;  // default_seed(k)
  double margin_target = 1e-6;
  int dim = 3;
  std::int64_t cap = 2'000'000;
};

/// Counterexample cocycle: angle vanishes on the seed segment S_N, periodic
/// angle sums pushed off pi Z for every orbit of period <= max_period.
/// Throws DomainError when a periodic orbit meets the segment.
CocycleSpec build_shear_rotation(const ToralAutomorphism& f, double epsilon, int segment_length,
                                 int max_period, const ShearRotationOptions& options = {});

CocycleSpec build_conjugated_conformal(ConjugatorField conjugator, ScalarField lambda,
                                       ScalarField theta, const ToralAutomorphism& f,
                                       int validation_grid = 32);

struct HolderFit {
  bool constant = false;  // numerator identically zero: beta = infinity
  double beta = 0.0;
  double log_const = 0.0;
  std::size_t pairs_used = 0;
  double max_ratio = 0.0;  // max of numerator / dist^claimed_beta
};

/// Log-log regression of |A(x)-A(y)| + |A(x)^-1 - A(y)^-1| against dist(x,y)
/// over random close pairs with dist in [min_dist, max_dist].
HolderFit holder_estimate(const CocycleSpec& c, int sample_pairs, std::mt19937_64& rng,
                          double min_dist = 1e-4, double max_dist = 1e-2);

void write_grid_payload(const std::filesystem::path& path, const GridCocycle& grid);
GridCocycle read_grid_payload(const std::filesystem::path& path);

/// Sample a cocycle on a res x res grid (for building grid cocycles).
GridCocycle sample_to_grid(const CocycleSpec& c, int resolution);

}  // namespace cocycle
