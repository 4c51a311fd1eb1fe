#pragma once

// Hyperbolic base dynamics on the k-torus R^k / Z^k.
//
// Points are stored as canonical representatives in [0,1)^k. Floating-point
// iteration of an integer matrix is exact on dyadic points whose denominator
// leaves headroom in the mantissa (see quantize()); all sampling routines in
// the library draw dyadic points so that forward and backward orbits agree
// bit-for-bit. Periodic data is handled in exact rational arithmetic.

#include "cocycle/linalg.hpp"

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace cocycle {

class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(const Vector& coords);
  TorusPoint(std::initializer_list<double> coords);

  const Vector& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_(i); }

  friend bool operator==(const TorusPoint& a, const TorusPoint& b) {
    return a.coords_ == b.coords_;
  }

 private:
  Vector coords_;
};

/// Canonical representative of t in [0,1).
double wrap_unit(double t);

/// Shortest lift of y - x, each coordinate in [-1/2, 1/2).
Vector torus_displacement(const TorusPoint& x, const TorusPoint& y);

/// Euclidean distance between closest lifts.
double torus_dist(const TorusPoint& x, const TorusPoint& y);

/// Diameter of the flat unit torus of dimension k.
double torus_diameter(Eigen::Index k);

/// Round every coordinate to a multiple of 2^-bits.
TorusPoint quantize(const TorusPoint& x, int bits = 40);

/// Uniform dyadic sample (multiples of 2^-40).
TorusPoint random_point(Eigen::Index k, std::mt19937_64& rng);

/// Uniform grid of res^k points i/res (row-major, first coordinate slowest).
std::vector<TorusPoint> uniform_grid(Eigen::Index k, int res);

// Exact rational point with a common denominator, numerators in [0, den).
class RationalPoint {
 public:
  RationalPoint() = default;
  RationalPoint(std::vector<std::int64_t> numerators, std::int64_t denominator);

  const std::vector<std::int64_t>& numerators() const { return num_; }
  std::int64_t denominator() const { return den_; }
  std::size_t dim() const { return num_.size(); }

  TorusPoint to_torus() const;
  /// "num/den" of coordinate i in lowest terms.
  std::string coordinate_string(std::size_t i) const;

  friend bool operator==(const RationalPoint&, const RationalPoint&) = default;
  friend auto operator<=>(const RationalPoint& a, const RationalPoint& b) {
    return std::tie(a.den_, a.num_) <=> std::tie(b.den_, b.num_);
  }

 private:
  std::vector<std::int64_t> num_;
  std::int64_t den_ = 1;
};

class ToralAutomorphism {
 public:
  /// Validates |det| = 1 and hyperbolicity; throws DomainError otherwise.
  explicit ToralAutomorphism(const IntMatrix& m);

  static ToralAutomorphism cat_map();

  const IntMatrix& matrix() const { return m_; }
  const IntMatrix& inverse_matrix() const { return m_inv_; }
  Eigen::Index dim() const { return m_.rows(); }

  const ComplexVector& eigenvalues() const { return eigenvalues_; }
  /// min |log|mu|| over eigenvalues: the hyperbolicity exponent.
  double kappa() const { return kappa_; }
  /// Condition number of the eigenbasis, the constant in the Anosov estimate.
  double anosov_constant() const { return anosov_constant_; }
  const Matrix& stable_basis() const { return stable_basis_; }
  const Matrix& unstable_basis() const { return unstable_basis_; }

  /// Unit eigenvector of the weakest real contraction and its eigenvalue.
  const Vector& stable_direction() const { return stable_dir_; }
  double stable_eigenvalue() const { return stable_mu_; }
  const Vector& unstable_direction() const { return unstable_dir_; }
  double unstable_eigenvalue() const { return unstable_mu_; }

  TorusPoint step(const TorusPoint& x) const;
  TorusPoint step_back(const TorusPoint& x) const;
  TorusPoint apply(const TorusPoint& x, long n) const;
  RationalPoint apply(const RationalPoint& p, long n) const;

  /// M^n in exact integer arithmetic (n may be negative).
  IntMatrix power(long n) const;

  /// x, f x, ..., f^{n-1} x.
  std::vector<TorusPoint> orbit(const TorusPoint& x, long n) const;

  /// Constant c with dist(f^i x, f^i p) <= c * dist(x, f^n x) for the
  /// closing construction, independent of n.
  double shadowing_constant() const;

 private:
  IntMatrix m_;
  IntMatrix m_inv_;
  ComplexVector eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
  double kappa_ = 0.0;
  double anosov_constant_ = 1.0;
  Matrix stable_basis_;
  Matrix unstable_basis_;
  Vector stable_dir_;
  Vector unstable_dir_;
  double stable_mu_ = 0.0;
  double unstable_mu_ = 0.0;
};

inline TorusPoint apply(const ToralAutomorphism& f, const TorusPoint& x, long n) {
  return f.apply(x, n);
}

struct PeriodicOrbit {
  RationalPoint point;  // lexicographically smallest point of the orbit
  int period = 0;       // minimal period
  std::vector<RationalPoint> orbit;
};

/// |det(M^n - I)|, the number of points fixed by f^n.
std::int64_t fixed_point_count(const ToralAutomorphism& f, long n);

/// All points with f^n p = p, grouped into orbits (minimal periods divide n).
/// Throws SizeError when the count exceeds cap.
std::vector<PeriodicOrbit> periodic_points(const ToralAutomorphism& f, long n,
                                           std::int64_t cap = 2'000'000);

/// All periodic orbits with minimal period <= max_period, ordered by
/// (period, representative).
std::vector<PeriodicOrbit> periodic_orbits_up_to(const ToralAutomorphism& f, int max_period,
                                                 std::int64_t cap = 2'000'000);

struct ShadowResult {
  RationalPoint periodic_point;  // f^n p = p exactly
  double defect = 0.0;           // dist(x, f^n x)
  double stable_defect = 0.0;    // |stable component of the lifted defect|
  double unstable_defect = 0.0;
  std::vector<double> distances;  // dist(f^i x, f^i p), i = 0..n
  double measured_constant = 0.0;  // max_i distances[i] / defect
  double constant_bound = 0.0;     // f.shadowing_constant()
};

/// Exact closing of a near-recurrent segment x, ..., f^n x.
/// Throws PreconditionError if dist(x, f^n x) >= delta0.
ShadowResult closing_shadow(const ToralAutomorphism& f, const TorusPoint& x, long n,
                            double delta0 = 0.1);

/// y = x + delta * u^s on the local stable leaf of x.
TorusPoint stable_neighbor(const ToralAutomorphism& f, const TorusPoint& x, double delta);
TorusPoint unstable_neighbor(const ToralAutomorphism& f, const TorusPoint& x, double delta);

/// f^n y for y = stable_neighbor(x, delta), given x_n = f^n x. Uses the exact
/// linear relation instead of iterating y, so no unstable rounding growth.
TorusPoint stable_neighbor_iterate(const ToralAutomorphism& f, const TorusPoint& x_n,
                                   double delta, long n);
/// f^{-n} z for z = unstable_neighbor(x, delta), given x_{-n} = f^{-n} x.
TorusPoint unstable_neighbor_iterate(const ToralAutomorphism& f, const TorusPoint& x_minus_n,
                                     double delta, long n);

/// Default dense-orbit seed: (sqrt2 - 1, sqrt3 - 1, sqrt5 - 2, ...) quantized.
TorusPoint default_seed(Eigen::Index k);

// Uniform bucket index over points on the 2-torus for nearest/radius queries.
class TorusPointIndex {
 public:
  TorusPointIndex(const std::vector<TorusPoint>& points, int buckets_per_axis);

  /// Index of the nearest stored point; -1 if the index is empty.
  std::ptrdiff_t nearest(const TorusPoint& q) const;
  /// Indices of stored points within radius r of q.
  std::vector<std::size_t> within(const TorusPoint& q, double r) const;

  const std::vector<TorusPoint>& points() const { return points_; }

 private:
  std::size_t cell_of(double a, double b) const;

  std::vector<TorusPoint> points_;
  int res_;
  std::vector<std::vector<std::size_t>> cells_;
};

/// sup over a probe grid of the distance to the nearest of `points` (k = 2).
double covering_radius(const std::vector<TorusPoint>& points, int probe_res = 256);

}  // namespace cocycle
