#include "cocycle/fields.hpp"

#include <cmath>
#include <numbers>

namespace cocycle {

TrigField::TrigField(double constant, std::vector<TrigTerm> terms)
    : constant_(constant), terms_(std::move(terms)) {}

double TrigField::operator()(const TorusPoint& x) const {
  double v = constant_;
  for (const auto& t : terms_) {
    double arg = t.phase;
    for (std::size_t i = 0; i < t.wavevector.size() && static_cast<Eigen::Index>(i) < x.dim(); ++i)
      arg += 2.0 * std::numbers::pi * t.wavevector[i] * x[static_cast<Eigen::Index>(i)];
    v += t.amplitude * std::cos(arg);
  }
  return v;
}

double TrigField::lipschitz_bound() const {
  double l = 0.0;
  for (const auto& t : terms_) {
    double k2 = 0.0;
    for (int k : t.wavevector) k2 += static_cast<double>(k) * k;
    l += std::abs(t.amplitude) * 2.0 * std::numbers::pi * std::sqrt(k2);
  }
  return l;
}

double TrigField::amplitude_bound() const {
  double a = 0.0;
  for (const auto& t : terms_) a += std::abs(t.amplitude);
  return a;
}

ScalarField ScalarField::trig(TrigField g) {
  ScalarField s;
  s.kind_ = Kind::trig;
  s.g_ = std::move(g);
  return s;
}

ScalarField ScalarField::exp_trig(TrigField g) {
  ScalarField s = trig(std::move(g));
  s.kind_ = Kind::exp_trig;
  return s;
}

ScalarField ScalarField::coboundary(TrigField potential, const ToralAutomorphism& f) {
  if (potential.constant() - potential.amplitude_bound() <= 0.0) {
    throw DomainError("coboundary potential must be bounded away from zero");
  }
  ScalarField s = trig(std::move(potential));
  s.kind_ = Kind::coboundary;
  s.f_ = std::make_shared<const ToralAutomorphism>(f);
  return s;
}

double ScalarField::operator()(const TorusPoint& x) const {
  switch (kind_) {
    case Kind::trig:
      return g_(x);
    case Kind::exp_trig:
      return std::exp(g_(x));
    case Kind::coboundary:
      return g_(f_->step(x)) / g_(x);
  }
  return 0.0;
}

double ScalarField::lipschitz_bound() const {
  switch (kind_) {
    case Kind::trig:
      return g_.lipschitz_bound();
    case Kind::exp_trig:
      return g_.lipschitz_bound() * std::exp(g_.constant() + g_.amplitude_bound());
    case Kind::coboundary: {
      const double lo = g_.constant() - g_.amplitude_bound();
      const double hi = g_.constant() + g_.amplitude_bound();
      const double lip_f = op_norm(f_->matrix().cast<double>());
      return g_.lipschitz_bound() * (lip_f / lo + hi / (lo * lo));
    }
  }
  return 0.0;
}

std::pair<double, double> ScalarField::range() const {
  const double lo = g_.constant() - g_.amplitude_bound();
  const double hi = g_.constant() + g_.amplitude_bound();
  switch (kind_) {
    case Kind::trig:
      return {lo, hi};
    case Kind::exp_trig:
      return {std::exp(lo), std::exp(hi)};
    case Kind::coboundary:
      return {lo / hi, hi / lo};
  }
  return {lo, hi};
}

ConjugatorField ConjugatorField::constant(Matrix c) {
  if (c.rows() != c.cols()) throw DomainError("conjugator must be square");
  ConjugatorField f;
  f.kind_ = Kind::constant;
  f.d_ = static_cast<int>(c.rows());
  f.c_ = std::move(c);
  return f;
}

ConjugatorField ConjugatorField::rotated_diagonal(TrigField psi, TrigField rho) {
  ConjugatorField f;
  f.kind_ = Kind::rotated_diagonal;
  f.d_ = 2;
  f.fields_ = {std::move(psi), std::move(rho)};
  return f;
}

ConjugatorField ConjugatorField::entries(int d, std::vector<TrigField> e) {
  if (d < 2 || static_cast<int>(e.size()) != d * d) {
    throw DomainError("entrywise conjugator needs d*d fields");
  }
  ConjugatorField f;
  f.kind_ = Kind::entries;
  f.d_ = d;
  f.fields_ = std::move(e);
  return f;
}

Matrix ConjugatorField::operator()(const TorusPoint& x) const {
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::rotated_diagonal: {
      const Matrix r = rotation2(fields_[0](x));
      const double s = std::exp(fields_[1](x));
      Matrix d = Matrix::Zero(2, 2);
      d(0, 0) = s;
      d(1, 1) = 1.0 / s;
      return r * d * r.transpose();
    }
    case Kind::entries: {
      Matrix m(d_, d_);
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) m(i, j) = fields_[static_cast<std::size_t>(i * d_ + j)](x);
      return m;
    }
  }
  return c_;
}

}  // namespace cocycle
