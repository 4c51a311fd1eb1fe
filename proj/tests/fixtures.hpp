#pragma once

// Shared cocycles and random generators for the test binaries.

#include "cocycle/cocycle.hpp"
#include "cocycle/conformal.hpp"
#include "cocycle/torus.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fixtures {

using namespace cocycle;

inline const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

inline TrigField cos_term(double constant, double amplitude, std::vector<int> k, double phase = 0.0) {
  return TrigField(constant, {TrigTerm{amplitude, std::move(k), phase}});
}

// Conjugator R(psi) diag(sqrt3, 1/sqrt3) R(psi)^T: det 1, condition number 3.
inline ConjugatorField conjugator_cond3() {
  TrigField psi(0.2, {TrigTerm{0.3, {1, 0}, 0.0}, TrigTerm{0.2, {0, 1}, 0.5}});
  return ConjugatorField::rotated_diagonal(psi, TrigField(std::log(std::sqrt(3.0))));
}

// lambda = phi0(f x) / phi0(x) with phi0 = 2 + cos 2 pi x1.
inline CocycleSpec conjugated_conformal(const ToralAutomorphism& f) {
  return build_conjugated_conformal(conjugator_cond3(),
                                    ScalarField::coboundary(cos_term(2.0, 1.0, {1, 0}), f),
                                    ScalarField::trig(cos_term(1.0, 0.2, {1, 0}, 0.3)), f);
}

inline CocycleSpec conformal_field() {
  return CocycleSpec::conformal(ScalarField::exp_trig(cos_term(0.0, 0.3, {1, 0})),
                                ScalarField::trig(cos_term(0.7, 0.5, {0, 1}, 0.2)));
}

inline CocycleSpec identity(int d = 2) { return CocycleSpec::constant(Matrix::Identity(d, d)); }

inline Matrix diag2(double a, double b) {
  Matrix m(2, 2);
  m << a, 0, 0, b;
  return m;
}

// K of a 2x2 matrix: splitting A into its conformal part z1 and anticonformal
// part z2 gives singular values |z1| + |z2| and ||z1| - |z2||.
inline double k_closed_form(const Matrix& a) {
  const double z1 = std::hypot(a(0, 0) + a(1, 1), a(1, 0) - a(0, 1)) / 2.0;
  const double z2 = std::hypot(a(0, 0) - a(1, 1), a(1, 0) + a(0, 1)) / 2.0;
  return (z1 + z2) / std::abs(z1 - z2);
}

inline Matrix random_matrix(int d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  return m;
}

// Invertible with condition number at most ~max_cond.
inline Matrix random_invertible(int d, std::mt19937_64& rng, double max_cond = 20.0) {
  for (;;) {
    Matrix m = random_matrix(d, rng);
    if (condition_number(m) <= max_cond) return m;
  }
}

// Random det-1 SPD matrix with log-eigenvalues of size up to `spread`.
inline Matrix random_structure(int d, std::mt19937_64& rng, double spread = 1.5) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::HouseholderQR<Matrix> qr(random_matrix(d, rng));
  const Matrix q = qr.householderQ();
  Vector l(d);
  for (int i = 0; i < d; ++i) l(i) = u(rng);
  l.array() -= l.mean();
  return conformal::symmetrize(Matrix(q * l.array().exp().matrix().asDiagonal() * q.transpose()));
}

}  // namespace fixtures
