#include "cocycle/spectral.hpp"

#include "cocycle/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cocycle {

namespace {

constexpr long kDirectThreshold = 30;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

// Forward product P = F^n_x and its inverse Q, both kept normalized.
class DistortionTracker {
 public:
  explicit DistortionTracker(int d) : fwd_(d), inv_(d) {}

  void push(const Matrix& a, const Matrix& a_inv) {
    fwd_.left_multiply(a);
    inv_.right_multiply(a_inv);
    fwd_.renormalize();
    inv_.renormalize();
  }

  double log_k() const {
    return std::max(0.0, fwd_.log_norm() + inv_.log_norm());
  }

 private:
  LogScaledProduct fwd_;
  LogScaledProduct inv_;
};

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "unknown";
}

double log_qc_distortion(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x,
                         long n, int stride) {
  if (n == 0) return 0.0;
  const int d = c.dim();
  LogScaledProduct fwd(d);
  LogScaledProduct inv(d);
  TorusPoint y = x;
  const long steps = n > 0 ? n : -n;
  for (long i = 0; i < steps; ++i) {
    Matrix a;
    if (n > 0) {
      a = evaluate(c, y);
      y = f.step(y);
      fwd.left_multiply(a);
      inv.right_multiply(a.inverse());
    } else {
      y = f.step_back(y);
      a = evaluate(c, y);
      fwd.left_multiply(a.inverse());
      inv.right_multiply(a);
    }
    if ((i + 1) % stride == 0 || i + 1 == steps) {
      fwd.renormalize();
      inv.renormalize();
    }
  }
  return std::max(0.0, fwd.log_norm() + inv.log_norm());
}

double qc_distortion(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x,
                     long n) {
  if (n == 0) return 1.0;
  if (std::abs(n) <= kDirectThreshold) return distortion(compose(c, f, x, n));
  return std::exp(log_qc_distortion(c, f, x, n));
}

LyapunovExtremes lyapunov_extremes(const CocycleSpec& c, const ToralAutomorphism& f,
                                   const TorusPoint& x, long T, int stride, int checkpoints) {
  if (T < 100) throw PreconditionError("lyapunov_extremes needs T >= 100");
  if (stride < 1) throw DomainError("re-orthogonalization stride must be positive");
  const int d = c.dim();
  LyapunovExtremes out;
  out.orbit_length = T;
  Matrix q = Matrix::Identity(d, d);
  Matrix block = Matrix::Identity(d, d);
  double sum_plus = 0.0;
  double sum_minus = 0.0;
  const long every = std::max<long>(stride, (T / std::max(1, checkpoints)) / stride * stride);
  TorusPoint y = x;
  for (long t = 0; t < T; ++t) {
    block = evaluate(c, y) * block;
    y = f.step(y);
    const bool flush = (t + 1) % stride == 0 || t + 1 == T;
    if (!flush) continue;
    Eigen::HouseholderQR<Matrix> qr(block * q);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    Matrix qn = qr.householderQ();
    // Make diag(R) positive so Q is continuous along the orbit.
    for (int i = 0; i < d; ++i) {
      if (r(i, i) < 0) qn.col(i) = -qn.col(i);
    }
    sum_plus += std::log(std::abs(r(0, 0)));
    sum_minus += std::log(std::abs(r(d - 1, d - 1)));
    q = qn;
    block.setIdentity();
    if ((t + 1) % every == 0 || t + 1 == T) {
      const double steps = static_cast<double>(t + 1);
      out.convergence_trace.push_back({t + 1, sum_plus / steps, sum_minus / steps});
    }
  }
  out.lambda_plus = sum_plus / static_cast<double>(T);
  out.lambda_minus = sum_minus / static_cast<double>(T);
  if (out.lambda_minus > out.lambda_plus) std::swap(out.lambda_plus, out.lambda_minus);
  return out;
}

Diagonalizability diagonalizability(const Matrix& m, double separation_tol) {
  Eigen::EigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw ConvergenceError("eigen decomposition failed");
  const ComplexVector mu = es.eigenvalues();
  Eigen::MatrixXcd v = es.eigenvectors();
  for (Eigen::Index j = 0; j < v.cols(); ++j) v.col(j).normalize();
  Diagonalizability out;
  const double scale = std::max(mu.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = i + 1; j < mu.size(); ++j) sep = std::min(sep, std::abs(mu(i) - mu(j)));
  out.min_separation = sep / scale;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto s = svd.singularValues();
  const double smin = s(s.size() - 1);
  out.eigenvector_condition =
      smin > 0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  if (out.min_separation >= separation_tol || out.eigenvector_condition <= 1e6) {
    out.verdict = Verdict::pass;
  } else if (out.eigenvector_condition > 1e12) {
    out.verdict = Verdict::fail;
  } else {
    out.verdict = Verdict::indeterminate;
  }
  return out;
}

Matrix return_map(const CocycleSpec& c, const PeriodicOrbit& orbit) {
  Matrix p = Matrix::Identity(c.dim(), c.dim());
  for (const auto& q : orbit.orbit) p = evaluate(c, q.to_torus()) * p;
  return p;
}

PeriodicScan periodic_scan(const CocycleSpec& c, const ToralAutomorphism& f, int max_period,
                           const PeriodicScanOptions& options) {
  const auto orbits = periodic_orbits_up_to(f, max_period, options.cap);
  PeriodicScan scan;
  scan.data.resize(orbits.size());
  parallel_for(orbits.size(), options.workers, [&](std::size_t i) {
    PeriodicDatum& d = scan.data[i];
    d.orbit = orbits[i];
    d.return_map = return_map(c, orbits[i]);
    d.eigenvalues = d.return_map.eigenvalues();
    d.diagonal = diagonalizability(d.return_map, options.separation_tol);
    const Vector s = singular_values(d.return_map);
    d.k_p = s(0) / s(s.size() - 1);
    d.norm_max = std::max(s(0), 1.0 / s(s.size() - 1));
    const Vector moduli = d.eigenvalues.cwiseAbs();
    const double hi = moduli.maxCoeff();
    const double lo = moduli.minCoeff();
    d.equal_moduli = hi / lo - 1.0 <= options.moduli_tol;
    d.unit_moduli = (moduli.array() - 1.0).abs().maxCoeff() <= options.moduli_tol;
    d.lyapunov_max = std::log(hi) / d.orbit.period;
    d.lyapunov_min = std::log(lo) / d.orbit.period;
  });
  for (const auto& d : scan.data) {
    scan.sup_k = std::max(scan.sup_k, d.k_p);
    scan.sup_norm_max = std::max(scan.sup_norm_max, d.norm_max);
    scan.all_diagonalizable = scan.all_diagonalizable && d.diagonal.verdict == Verdict::pass;
    scan.any_indeterminate = scan.any_indeterminate || d.diagonal.verdict == Verdict::indeterminate;
    scan.all_equal_moduli = scan.all_equal_moduli && d.equal_moduli;
    scan.all_unit_moduli = scan.all_unit_moduli && d.unit_moduli;
  }
  if (c.dim() == 2) scan.dim2_checklist = scan.all_diagonalizable && scan.all_equal_moduli;
  return scan;
}

PinchingRate pinching_rate(const CocycleSpec& c, const ToralAutomorphism& f,
                           const std::vector<TorusPoint>& samples, int n_max,
                           const std::vector<double>& eps_values, int workers) {
  if (n_max < 20) throw PreconditionError("pinching_rate needs n_max >= 20");
  if (samples.empty()) throw DomainError("pinching_rate needs at least one sample point");
  const int d = c.dim();
  const auto n = static_cast<std::size_t>(n_max);
  // per-sample table of log K(x, |n|) maximized over the sign of n
  std::vector<std::vector<double>> table(samples.size(), std::vector<double>(n, 0.0));
  parallel_for(samples.size(), workers, [&](std::size_t s) {
    DistortionTracker fwd(d);
    DistortionTracker back(d);
    TorusPoint y = samples[s];
    TorusPoint z = samples[s];
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix a = evaluate(c, y);
      fwd.push(a, a.inverse());
      y = f.step(y);
      z = f.step_back(z);
      const Matrix b = evaluate(c, z);
      back.push(b.inverse(), b);
      table[s][i] = std::max(fwd.log_k(), back.log_k());
    }
  });
  PinchingRate out;
  out.sup_log_k.assign(n, 0.0);
  for (const auto& row : table)
    for (std::size_t i = 0; i < n; ++i) out.sup_log_k[i] = std::max(out.sup_log_k[i], row[i]);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i + 1);
  const LineFit fit = least_squares(xs, out.sup_log_k);
  out.gamma = fit.slope;
  out.intercept = fit.intercept;
  for (double eps : eps_values) {
    double best = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      best = std::max(best, std::exp(out.sup_log_k[i] - eps * xs[i]));
    out.c_eps.emplace_back(eps, best);
  }
  return out;
}

DistortionComparison distortion_comparison(const Matrix& a, const Matrix& b) {
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const double r1 = op_norm(a.inverse() * b - id);
  const double r2 = op_norm(a * b.inverse() - id);
  const double r = std::min(r1, r2);
  if (!(r < 1.0)) {
    throw PreconditionError("distortion_comparison needs |A^-1 B - Id| < 1 or |A B^-1 - Id| < 1 (got " +
                            std::to_string(r) + ")");
  }
  DistortionComparison out;
  out.r = r;
  out.k_a = distortion(a);
  out.k_b = distortion(b);
  out.lower = (1.0 - r) / (1.0 + r);
  out.upper = (1.0 + r) / (1.0 - r);
  const double ratio = out.k_a / out.k_b;
  const double slack = 1e-12;
  out.pass = ratio >= out.lower * (1.0 - slack) && ratio <= out.upper * (1.0 + slack);
  return out;
}

namespace {

Matrix orthonormal_basis(const Matrix& m) {
  if (m.cols() == 0 || m.cols() > m.rows()) throw DomainError("subspace basis has a bad shape");
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(1e-12);
  if (qr.rank() < m.cols()) throw DomainError("degenerate subspace: basis columns are dependent");
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

}  // namespace

double principal_angle_distance(const Matrix& xi, const Matrix& eta) {
  if (xi.rows() != eta.rows() || xi.cols() != eta.cols()) {
    throw DomainError("subspaces must have the same ambient and subspace dimension");
  }
  const Matrix a = orthonormal_basis(xi);
  const Matrix b = orthonormal_basis(eta);
  // sin of the largest principal angle = |(I - P_a) b|.
  const Matrix residual = b - a * (a.transpose() * b);
  const double s = std::min(1.0, op_norm(residual));
  return std::asin(s);
}

GrassmannDistortion grassmann_distortion(const CocycleSpec& c, const ToralAutomorphism& f,
                                         const TorusPoint& x, long n, const Matrix& xi,
                                         const Matrix& eta, double constant) {
  GrassmannDistortion out;
  const Matrix m = compose(c, f, x, n);
  out.input_distance = principal_angle_distance(xi, eta);
  out.image_distance = principal_angle_distance(m * xi, m * eta);
  out.k = distortion(m);
  out.bound = constant * out.k;
  if (out.input_distance == 0.0) {
    out.pass = out.image_distance <= 1e-12;
    return out;
  }
  out.ratio = out.image_distance / out.input_distance;
  out.pass = *out.ratio <= out.bound * (1.0 + 1e-10);
  return out;
}

}  // namespace cocycle
