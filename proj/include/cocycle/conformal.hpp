#pragma once

// The space of conformal structures on R^d: symmetric positive-definite
// matrices of determinant 1, i.e. SL(d)/SO(d), with its GL(d)-invariant
// Riemannian metric
//
//     dist(Id, C) = sqrt(d)/2 * |log eig(C)|_2.
//
// All routines are free function templates over Eigen dense types so they work
// for any real scalar (double and long double are exercised by the tests).
// Every routine re-symmetrizes its result.

#include "cocycle/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace cocycle::conformal {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
using PlainOf = Mat<typename Derived::Scalar>;

template <typename Derived>
PlainOf<Derived> symmetrize(const Eigen::MatrixBase<Derived>& c) {
  return (c + c.transpose()) / typename Derived::Scalar(2);
}

/// Apply a scalar function to the eigenvalues of a symmetric matrix.
template <typename Derived, typename Fn>
PlainOf<Derived> spectral_apply(const Eigen::MatrixBase<Derived>& c, Fn fn) {
  using S = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrize(c));
  Vec<S> v = es.eigenvalues();
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = fn(v(i));
  return symmetrize(Mat<S>(es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose()));
}

template <typename Derived>
PlainOf<Derived> spd_sqrt(const Eigen::MatrixBase<Derived>& c) {
  using std::sqrt;
  return spectral_apply(c, [](auto l) { return sqrt(l); });
}

template <typename Derived>
PlainOf<Derived> spd_inv_sqrt(const Eigen::MatrixBase<Derived>& c) {
  using std::sqrt;
  return spectral_apply(c, [](auto l) { return 1 / sqrt(l); });
}

template <typename Derived>
PlainOf<Derived> spd_log(const Eigen::MatrixBase<Derived>& c) {
  using std::log;
  return spectral_apply(c, [](auto l) { return log(l); });
}

template <typename Derived>
PlainOf<Derived> sym_exp(const Eigen::MatrixBase<Derived>& s) {
  using std::exp;
  return spectral_apply(s, [](auto l) { return exp(l); });
}

template <typename Derived>
PlainOf<Derived> spd_power(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar t) {
  using std::pow;
  return spectral_apply(c, [t](auto l) { return pow(l, t); });
}

/// True when c is symmetric (1e-12), positive definite and has det 1 (1e-10).
template <typename Derived>
bool is_structure(const Eigen::MatrixBase<Derived>& c) {
  using S = typename Derived::Scalar;
  using std::abs;
  if (c.rows() != c.cols()) return false;
  if ((c - c.transpose()).norm() > S(1e-12) * std::max(S(1), c.norm())) return false;
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrize(c), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > S(0))) return false;
  return abs(es.eigenvalues().prod() - S(1)) <= S(1e-10);
}

/// G / det(G)^{1/d}. Throws DomainError (reporting the smallest eigenvalue)
/// if G is not symmetric positive-definite.
template <typename Derived>
PlainOf<Derived> normalize(const Eigen::MatrixBase<Derived>& g) {
  using S = typename Derived::Scalar;
  using std::log;
  using std::exp;
  if (g.rows() != g.cols()) throw DomainError("normalize: matrix is not square");
  if ((g - g.transpose()).norm() > S(1e-9) * std::max(S(1), g.norm())) {
    throw DomainError("normalize: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrize(g), Eigen::EigenvaluesOnly);
  const S smallest = es.eigenvalues()(0);
  if (!(smallest > S(0))) {
    throw DomainError("normalize: matrix is not positive definite (smallest eigenvalue " +
                      std::to_string(static_cast<double>(smallest)) + ")");
  }
  S log_det = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) log_det += log(es.eigenvalues()(i));
  return symmetrize(g) * exp(-log_det / S(g.rows()));
}

/// Eigenvalues of C1^{-1} C2 (generalized problem C2 v = l C1 v), ascending.
template <typename D1, typename D2>
Vec<typename D1::Scalar> relative_eigenvalues(const Eigen::MatrixBase<D1>& c1,
                                              const Eigen::MatrixBase<D2>& c2) {
  using S = typename D1::Scalar;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat<S>> es(symmetrize(c2), symmetrize(c1),
                                                      Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  return es.eigenvalues();
}

template <typename Derived>
typename Derived::Scalar dist_to_identity(const Eigen::MatrixBase<Derived>& c) {
  using S = typename Derived::Scalar;
  using std::log;
  using std::sqrt;
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrize(c), Eigen::EigenvaluesOnly);
  S acc = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const S l = log(es.eigenvalues()(i));
    acc += l * l;
  }
  return sqrt(S(c.rows())) / S(2) * sqrt(acc);
}

template <typename D1, typename D2>
typename D1::Scalar dist(const Eigen::MatrixBase<D1>& c1, const Eigen::MatrixBase<D2>& c2) {
  using S = typename D1::Scalar;
  using std::log;
  using std::sqrt;
  const Vec<S> l = relative_eigenvalues(c1, c2);
  S acc = 0;
  for (Eigen::Index i = 0; i < l.size(); ++i) acc += log(l(i)) * log(l(i));
  return sqrt(S(c1.rows())) / S(2) * sqrt(acc);
}

template <typename Scalar>
struct NormComparison {
  Scalar lower = 0;  // sqrt(d/8) log(|C| |C^-1|)
  Scalar distance = 0;
  Scalar upper = 0;  // d/2 max(log|C|, log|C^-1|)
  bool sandwich_holds = false;
  bool inverse_norm_bound_holds = false;  // |C^-1| <= |C|^{d-1}
};

template <typename Derived>
NormComparison<typename Derived::Scalar> norm_comparison(const Eigen::MatrixBase<Derived>& c) {
  using S = typename Derived::Scalar;
  using std::log;
  using std::pow;
  using std::sqrt;
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrize(c), Eigen::EigenvaluesOnly);
  const S lmin = es.eigenvalues()(0);
  const S lmax = es.eigenvalues()(es.eigenvalues().size() - 1);
  const S d = S(c.rows());
  NormComparison<S> out;
  out.lower = sqrt(d / S(8)) * log(lmax / lmin);
  out.distance = dist_to_identity(c);
  out.upper = d / S(2) * std::max(log(lmax), -log(lmin));
  const S slack = S(1e-12) * (S(1) + out.upper);
  out.sandwich_holds = out.lower <= out.distance + slack && out.distance <= out.upper + slack;
  out.inverse_norm_bound_holds = S(1) / lmin <= pow(lmax, d - S(1)) * (S(1) + S(1e-12));
  return out;
}

/// X[C] = (det X^T X)^{-1/d} X^T C X, the pull-back of C by X.
template <typename DX, typename DC>
PlainOf<DC> pullback(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DC>& c) {
  using S = typename DC::Scalar;
  using std::abs;
  using std::pow;
  const Mat<S> xm = x;
  const S det = xm.determinant();
  if (!(abs(det) > S(0)) || !std::isfinite(static_cast<double>(det))) {
    throw DomainError("pullback: matrix is singular");
  }
  const S scale = pow(abs(det), S(-2) / S(c.rows()));
  return symmetrize(Mat<S>(scale * xm.transpose() * c * xm));
}

/// Point at parameter t on the geodesic from C1 (t = 0) to C2 (t = 1).
template <typename D1, typename D2>
PlainOf<D1> geodesic(const Eigen::MatrixBase<D1>& c1, const Eigen::MatrixBase<D2>& c2,
                     typename D1::Scalar t) {
  using S = typename D1::Scalar;
  const Mat<S> half = spd_sqrt(c1);
  const Mat<S> inv_half = spd_inv_sqrt(c1);
  const Mat<S> inner = symmetrize(Mat<S>(inv_half * c2 * inv_half));
  return normalize(Mat<S>(half * spd_power(inner, t) * half));
}

template <typename Scalar>
struct PerturbationCheck {
  Scalar lhs = 0;        // dist(C, A[C])
  Scalar rhs = 0;        // 3 d |C^-1| |C| |A - Id|
  Scalar threshold = 0;  // (6 |C^-1| |C|)^-1
  bool pass = false;
};

/// Perturbation bound for the pull-back action by A close to the identity.
/// Throws PreconditionError when |A - Id| exceeds the threshold.
template <typename DC, typename DA>
PerturbationCheck<typename DC::Scalar> perturbation_bound(const Eigen::MatrixBase<DC>& c,
                                                          const Eigen::MatrixBase<DA>& a) {
  using S = typename DC::Scalar;
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrize(c), Eigen::EigenvaluesOnly);
  const S cond = es.eigenvalues()(es.eigenvalues().size() - 1) / es.eigenvalues()(0);
  const Mat<S> r = a - Mat<S>::Identity(a.rows(), a.cols());
  Eigen::JacobiSVD<Mat<S>> svd(r);
  const S r_norm = svd.singularValues()(0);
  PerturbationCheck<S> out;
  out.threshold = S(1) / (S(6) * cond);
  if (r_norm > out.threshold) {
    throw PreconditionError("perturbation_bound: |A - Id| = " +
                            std::to_string(static_cast<double>(r_norm)) + " exceeds threshold " +
                            std::to_string(static_cast<double>(out.threshold)));
  }
  out.lhs = dist(c, pullback(a, c));
  out.rhs = S(3) * S(c.rows()) * cond * r_norm;
  out.pass = out.lhs <= out.rhs * (S(1) + S(1e-12)) + S(1e-15);
  return out;
}

// --- Tangent-space machinery -------------------------------------------------

/// Orthonormal basis (for the invariant metric at Id) of traceless symmetric
/// matrices, scaled so that coordinate norms equal distances.
template <typename Scalar>
std::vector<Mat<Scalar>> tangent_basis(Eigen::Index d) {
  using std::sqrt;
  std::vector<Mat<Scalar>> basis;
  const Scalar metric = sqrt(Scalar(d)) / Scalar(2);
  for (Eigen::Index j = 1; j < d; ++j) {
    Mat<Scalar> e = Mat<Scalar>::Zero(d, d);
    const Scalar norm = sqrt(Scalar(j * (j + 1)));
    for (Eigen::Index i = 0; i < j; ++i) e(i, i) = Scalar(1) / norm;
    e(j, j) = -Scalar(j) / norm;
    basis.push_back(e / metric);
  }
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      Mat<Scalar> e = Mat<Scalar>::Zero(d, d);
      e(i, j) = e(j, i) = Scalar(1) / sqrt(Scalar(2));
      basis.push_back(e / metric);
    }
  return basis;
}

// Frame at a base point: C^{1/2} and C^{-1/2} plus the coordinate basis.
template <typename Scalar>
struct TangentFrame {
  Mat<Scalar> half;
  Mat<Scalar> inv_half;
  std::vector<Mat<Scalar>> basis;

  explicit TangentFrame(const Mat<Scalar>& base)
      : half(spd_sqrt(base)), inv_half(spd_inv_sqrt(base)), basis(tangent_basis<Scalar>(base.rows())) {}

  /// Coordinates of Log_base(p); their Euclidean norm is dist(base, p).
  Vec<Scalar> log(const Mat<Scalar>& p) const {
    const Mat<Scalar> s = spd_log(Mat<Scalar>(inv_half * p * inv_half));
    Vec<Scalar> v(static_cast<Eigen::Index>(basis.size()));
    const Scalar d = Scalar(s.rows());
    // <S, E>_metric = d/4 * tr(S E); basis elements are metric-orthonormal.
    for (std::size_t i = 0; i < basis.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = d / Scalar(4) * (s.cwiseProduct(basis[i])).sum();
    return v;
  }

  Mat<Scalar> exp(const Vec<Scalar>& v) const {
    Mat<Scalar> s = Mat<Scalar>::Zero(half.rows(), half.cols());
    for (std::size_t i = 0; i < basis.size(); ++i) s += v(static_cast<Eigen::Index>(i)) * basis[i];
    return normalize(Mat<Scalar>(half * sym_exp(s) * half));
  }
};

/// Karcher (Frechet) mean by fixed-point iteration of the averaged log map.
template <typename Scalar>
Mat<Scalar> karcher_mean(const std::vector<Mat<Scalar>>& points, int max_iter = 100,
                         Scalar tol = Scalar(1e-12)) {
  if (points.empty()) throw DomainError("karcher_mean of an empty set");
  Mat<Scalar> c = points.front();
  for (int it = 0; it < max_iter; ++it) {
    TangentFrame<Scalar> frame(c);
    Vec<Scalar> mean = Vec<Scalar>::Zero(static_cast<Eigen::Index>(frame.basis.size()));
    for (const auto& p : points) mean += frame.log(p);
    mean /= Scalar(points.size());
    c = frame.exp(mean);
    if (mean.norm() < tol) break;
  }
  return c;
}

namespace detail {

template <typename Scalar>
struct Ball {
  Vec<Scalar> center;
  Scalar radius2 = -1;  // negative: empty ball

  bool contains(const Vec<Scalar>& p) const {
    if (radius2 < 0) return false;
    return (p - center).squaredNorm() <= radius2 * (Scalar(1) + Scalar(1e-10)) + Scalar(1e-24);
  }
};

template <typename Scalar>
Ball<Scalar> ball_through(const std::vector<Vec<Scalar>>& support, Eigen::Index dim) {
  Ball<Scalar> b;
  if (support.empty()) {
    b.center = Vec<Scalar>::Zero(dim);
    return b;
  }
  const Vec<Scalar>& q0 = support.front();
  if (support.size() == 1) {
    b.center = q0;
    b.radius2 = 0;
    return b;
  }
  const Eigen::Index m = static_cast<Eigen::Index>(support.size()) - 1;
  Mat<Scalar> diffs(dim, m);
  for (Eigen::Index j = 0; j < m; ++j) diffs.col(j) = support[static_cast<std::size_t>(j + 1)] - q0;
  const Mat<Scalar> gram = Scalar(2) * diffs.transpose() * diffs;
  const Vec<Scalar> rhs = diffs.colwise().squaredNorm().transpose();
  const Vec<Scalar> lambda = gram.completeOrthogonalDecomposition().solve(rhs);
  b.center = q0 + diffs * lambda;
  b.radius2 = 0;
  for (const auto& q : support) b.radius2 = std::max(b.radius2, (q - b.center).squaredNorm());
  return b;
}

// Welzl's recursive minimal enclosing ball.
template <typename Scalar>
Ball<Scalar> welzl(const std::vector<Vec<Scalar>>& pts, std::size_t n,
                   std::vector<Vec<Scalar>>& support, Eigen::Index dim) {
  if (n == 0 || support.size() == static_cast<std::size_t>(dim + 1)) return ball_through(support, dim);
  const Vec<Scalar>& p = pts[n - 1];
  Ball<Scalar> b = welzl(pts, n - 1, support, dim);
  if (b.contains(p)) return b;
  support.push_back(p);
  b = welzl(pts, n - 1, support, dim);
  support.pop_back();
  return b;
}

}  // namespace detail

/// Euclidean minimal enclosing ball; returns (center, radius).
template <typename Scalar>
std::pair<Vec<Scalar>, Scalar> euclidean_min_ball(std::vector<Vec<Scalar>> pts) {
  using std::sqrt;
  if (pts.empty()) throw DomainError("minimal ball of an empty set");
  const Eigen::Index dim = pts.front().size();
  std::mt19937_64 rng(0x5eed);
  std::shuffle(pts.begin(), pts.end(), rng);
  std::vector<Vec<Scalar>> support;
  const auto b = detail::welzl(pts, pts.size(), support, dim);
  return {b.center, sqrt(std::max(Scalar(0), b.radius2))};
}

enum class CircumcenterMethod {
  tangent_ball,  // Euclidean minimal ball in the tangent space, re-centred until stationary
  subgradient,   // geodesic step 1/(k+1) toward the farthest point
};

template <typename Scalar>
struct Circumcenter {
  Mat<Scalar> center;
  Scalar radius = 0;
  int iterations = 0;
};

template <typename Scalar>
Scalar max_distance(const Mat<Scalar>& c, const std::vector<Mat<Scalar>>& points,
                    std::size_t* argmax = nullptr) {
  Scalar worst = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Scalar d = dist(c, points[i]);
    if (d > worst) {
      worst = d;
      if (argmax) *argmax = i;
    }
  }
  return worst;
}

/// Centre of the smallest ball containing `points` in the symmetric space,
/// warm-started at the Karcher mean. Throws ConvergenceError (with the last
/// radius and the step size) if the iteration cap is reached.
template <typename Scalar>
Circumcenter<Scalar> circumcenter(const std::vector<Mat<Scalar>>& points, Scalar tol = Scalar(1e-8),
                                  CircumcenterMethod method = CircumcenterMethod::tangent_ball,
                                  int max_iter = 0) {
  if (points.empty()) throw DomainError("circumcenter of an empty set");
  Circumcenter<Scalar> out;
  if (points.size() == 1) {
    out.center = points.front();
    return out;
  }
  Mat<Scalar> c = karcher_mean(points, 30, tol);
  Scalar radius = max_distance(c, points);

  if (method == CircumcenterMethod::subgradient) {
    if (max_iter <= 0) max_iter = 200000;
    Mat<Scalar> best = c;
    Scalar best_radius = radius;
    for (int k = 0; k < max_iter; ++k) {
      std::size_t far = 0;
      const Scalar r = max_distance(c, points, &far);
      if (r < best_radius) {
        best_radius = r;
        best = c;
      }
      c = geodesic(c, points[far], Scalar(1) / Scalar(k + 2));
      out.iterations = k + 1;
    }
    out.center = best;
    out.radius = best_radius;
    return out;
  }

  if (max_iter <= 0) max_iter = 500;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    TangentFrame<Scalar> frame(c);
    std::vector<Vec<Scalar>> logs;
    logs.reserve(points.size());
    for (const auto& p : points) logs.push_back(frame.log(p));
    auto [t, r_tangent] = euclidean_min_ball(logs);
    (void)r_tangent;
    if (t.norm() <= tol / Scalar(4)) {
      out.center = c;
      out.radius = radius;
      return out;
    }
    // Backtrack until the enclosing radius decreases.
    Vec<Scalar> step = t;
    bool moved = false;
    for (int half = 0; half < 40; ++half) {
      const Mat<Scalar> candidate = frame.exp(step);
      const Scalar r = max_distance(candidate, points);
      if (r < radius) {
        c = candidate;
        radius = r;
        moved = true;
        break;
      }
      step /= Scalar(2);
      if (step.norm() <= tol / Scalar(4)) break;
    }
    if (!moved) {
      out.center = c;
      out.radius = radius;
      return out;
    }
  }
  throw ConvergenceError("circumcenter did not converge in " + std::to_string(max_iter) +
                         " iterations (last radius " + std::to_string(static_cast<double>(radius)) +
                         ")");
}

}  // namespace cocycle::conformal
