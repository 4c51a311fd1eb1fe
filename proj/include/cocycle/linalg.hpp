#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cocycle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// Error hierarchy. Every failure the library reports is one of these; the CLI
// maps PreconditionError/ObstructionError to a "meaningful negative" exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Operator 2-norm (largest singular value).
double op_norm(const Matrix& a);

/// sigma_max / sigma_min of a square matrix; +inf for singular input.
double distortion(const Matrix& a);

/// Singular values in decreasing order.
Vector singular_values(const Matrix& a);

Matrix rotation2(double angle);

/// 2-norm condition number of an invertible matrix; identical to distortion()
/// but kept separate for readability at call sites that talk about conditioning.
inline double condition_number(const Matrix& a) { return distortion(a); }

// Small helpers for the long-product code paths.
struct LogScaledProduct {
  Matrix normalized;  // product / exp(log_scale), operator norm 1
  double log_scale = 0.0;

  explicit LogScaledProduct(Eigen::Index d)
      : normalized(Matrix::Identity(d, d)) {}

  void left_multiply(const Matrix& a);
  void right_multiply(const Matrix& a);
  void renormalize();
  double log_norm() const;
};

}  // namespace cocycle
