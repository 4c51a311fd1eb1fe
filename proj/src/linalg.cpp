#include "cocycle/linalg.hpp"

#include <cmath>
#include <limits>

namespace cocycle {

Vector singular_values(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues();
}

double op_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

double distortion(const Matrix& a) {
  const Vector s = singular_values(a);
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Matrix rotation2(double angle) {
  Matrix r(2, 2);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  r << c, -s, s, c;
  return r;
}

void LogScaledProduct::left_multiply(const Matrix& a) {
  normalized = a * normalized;
}

void LogScaledProduct::right_multiply(const Matrix& a) {
  normalized = normalized * a;
}

void LogScaledProduct::renormalize() {
  const double n = normalized.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("log-scaled product degenerated (norm " + std::to_string(n) + ")");
  }
  normalized /= n;
  log_scale += std::log(n);
}

double LogScaledProduct::log_norm() const {
  return log_scale + std::log(op_norm(normalized));
}

}  // namespace cocycle
