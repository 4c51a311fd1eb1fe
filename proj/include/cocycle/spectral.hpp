#pragma once

// Lyapunov data, quasiconformal distortion, and periodic-data scans.

#include "cocycle/cocycle.hpp"
#include "cocycle/linalg.hpp"
#include "cocycle/torus.hpp"

#include <optional>
#include <vector>

namespace cocycle {

/// K_F(x, n) = |F^n_x| |(F^n_x)^{-1}|. Direct product for |n| <= 30,
/// log-scaled forward/inverse products beyond.
double qc_distortion(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x, long n);

/// log K_F(x, n) from normalized forward and inverse products; stable for any n.
double log_qc_distortion(const CocycleSpec& c, const ToralAutomorphism& f, const TorusPoint& x,
                         long n, int stride = 10);

struct LyapunovCheckpoint {
  long steps = 0;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
};

struct LyapunovExtremes {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  long orbit_length = 0;
  std::vector<LyapunovCheckpoint> convergence_trace;
};

/// Extreme exponents along the orbit of x from QR re-orthogonalized products
/// (re-orthogonalization every `stride` steps). Requires T >= 100.
LyapunovExtremes lyapunov_extremes(const CocycleSpec& c, const ToralAutomorphism& f,
                                   const TorusPoint& x, long T, int stride = 10,
                                   int checkpoints = 100);

enum class Verdict { pass, fail, indeterminate };
const char* to_string(Verdict v);

struct Diagonalizability {
  Verdict verdict = Verdict::indeterminate;
  double min_separation = 0.0;         // min |mu_i - mu_j| / max |mu|
  double eigenvector_condition = 0.0;  // cond of the unit-column eigenvector matrix
};

/// Three-valued certificate: pass if eigenvalues are separated by at least
/// separation_tol or the eigenvector matrix has condition <= 1e6; fail if the
/// eigenvector matrix is numerically singular (cond > 1e12).
Diagonalizability diagonalizability(const Matrix& m, double separation_tol = 1e-6);

struct PeriodicDatum {
  PeriodicOrbit orbit;
  Matrix return_map;
  ComplexVector eigenvalues;
  Diagonalizability diagonal;
  double k_p = 1.0;       // K_F(p, n)
  double norm_max = 1.0;  // max(|F^n_p|, |(F^n_p)^{-1}|)
  bool equal_moduli = false;
  bool unit_moduli = false;
  // Exponents at p from the exact return-map spectrum: log|mu| / period.
  double lyapunov_max = 0.0;
  double lyapunov_min = 0.0;
};

struct PeriodicScanOptions {
  double moduli_tol = 1e-8;
  double separation_tol = 1e-6;
  int workers = 1;
  std::int64_t cap = 2'000'000;
};

struct PeriodicScan {
  std::vector<PeriodicDatum> data;
  double sup_k = 1.0;         // empirical C_per
  double sup_norm_max = 1.0;  // empirical C'_per
  bool all_diagonalizable = true;
  bool any_indeterminate = false;
  bool all_equal_moduli = true;
  bool all_unit_moduli = true;
  // d = 2 checklist: diagonalizable over C with equal eigenvalue moduli.
  std::optional<bool> dim2_checklist;
};

/// Return-map spectral data over every periodic orbit of period <= max_period.
PeriodicScan periodic_scan(const CocycleSpec& c, const ToralAutomorphism& f, int max_period,
                           const PeriodicScanOptions& options = {});

/// Return map F^n_p computed along the exact rational orbit.
Matrix return_map(const CocycleSpec& c, const PeriodicOrbit& orbit);

struct PinchingRate {
  double gamma = 0.0;      // slope of sup_x log K(x, n) against |n|
  double intercept = 0.0;
  std::vector<double> sup_log_k;  // index |n| - 1, sup over x and sign of n
  std::vector<std::pair<double, double>> c_eps;  // (eps, max K e^{-eps |n|})
};

/// Requires n_max >= 20.
PinchingRate pinching_rate(const CocycleSpec& c, const ToralAutomorphism& f,
                           const std::vector<TorusPoint>& samples, int n_max,
                           const std::vector<double>& eps_values = {0.01, 0.05, 0.1},
                           int workers = 1);

struct DistortionComparison {
  double r = 0.0;
  double k_a = 1.0;
  double k_b = 1.0;
  double lower = 1.0;  // (1 - r) / (1 + r)
  double upper = 1.0;  // (1 + r) / (1 - r)
  bool pass = false;
};

/// Two-sided bound on K(A)/K(B) when A^{-1}B or AB^{-1} is r-close to Id.
/// Throws PreconditionError if both distances are >= 1.
DistortionComparison distortion_comparison(const Matrix& a, const Matrix& b);

/// Largest principal angle between column spans.
double principal_angle_distance(const Matrix& xi, const Matrix& eta);

struct GrassmannDistortion {
  double input_distance = 0.0;
  double image_distance = 0.0;
  std::optional<double> ratio;  // empty for identical subspaces (0/0)
  double k = 1.0;
  double bound = 1.0;  // constant * K_F(x, n)
  bool pass = true;
};

/// Distortion of the induced action of F^n_x on k-subspaces (bases as columns).
GrassmannDistortion grassmann_distortion(const CocycleSpec& c, const ToralAutomorphism& f,
                                         const TorusPoint& x, long n, const Matrix& xi,
                                         const Matrix& eta, double constant = 1.0);

}  // namespace cocycle
