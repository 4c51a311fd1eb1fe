#pragma once

// Parametric fields on the torus used to build cocycles: smooth scalar
// fields (finite trigonometric sums and their exponentials), manufactured
// multiplicative coboundaries, and conjugating matrix fields.

#include "cocycle/linalg.hpp"
#include "cocycle/torus.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace cocycle {

struct TrigTerm {
  double amplitude = 0.0;
  std::vector<int> wavevector;  // integer frequencies, one per torus coordinate
  double phase = 0.0;
};

/// c + sum_j a_j cos(2 pi <k_j, x> + phi_j)
class TrigField {
 public:
  TrigField() = default;
  explicit TrigField(double constant, std::vector<TrigTerm> terms = {});

  double operator()(const TorusPoint& x) const;
  double constant() const { return constant_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }

  /// Upper bound on the Lipschitz constant w.r.t. torus_dist.
  double lipschitz_bound() const;
  /// sum |a_j|: bound on |value - constant|.
  double amplitude_bound() const;

 private:
  double constant_ = 0.0;
  std::vector<TrigTerm> terms_;
};

class ScalarField {
 public:
  enum class Kind { trig, exp_trig, coboundary };

  ScalarField() = default;

  static ScalarField trig(TrigField g);
  /// exp(g(x)); always positive.
  static ScalarField exp_trig(TrigField g);
  /// potential(f x) / potential(x); potential must stay positive.
  static ScalarField coboundary(TrigField potential, const ToralAutomorphism& f);

  double operator()(const TorusPoint& x) const;

  Kind kind() const { return kind_; }
  const TrigField& generator() const { return g_; }
  bool is_constant() const { return g_.terms().empty() && kind_ != Kind::coboundary; }
  double lipschitz_bound() const;
  /// Bounds (inf, sup) on the values.
  std::pair<double, double> range() const;

 private:
  Kind kind_ = Kind::trig;
  TrigField g_;
  std::shared_ptr<const ToralAutomorphism> f_;
};

/// Invertible matrix field C(x).
class ConjugatorField {
 public:
  enum class Kind { constant, rotated_diagonal, entries };

  static ConjugatorField constant(Matrix c);
  /// d = 2: R(psi(x)) diag(e^rho(x), e^-rho(x)) R(psi(x))^T, det 1, cond e^{2|rho|}.
  static ConjugatorField rotated_diagonal(TrigField psi, TrigField rho);
  /// Row-major d x d array of trig fields.
  static ConjugatorField entries(int d, std::vector<TrigField> e);

  Matrix operator()(const TorusPoint& x) const;
  int dim() const { return d_; }
  Kind kind() const { return kind_; }

  const Matrix& constant_value() const { return c_; }
  const std::vector<TrigField>& fields() const { return fields_; }

 private:
  Kind kind_ = Kind::constant;
  int d_ = 2;
  Matrix c_;
  std::vector<TrigField> fields_;
};

}  // namespace cocycle
