// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "cocycle/livsic.hpp"
#include "cocycle/spectral.hpp"
#include "cocycle/structures.hpp"

#include "fixtures.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace cocycle;
namespace cf = cocycle::conformal;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const ToralAutomorphism& cat() {
  static const ToralAutomorphism f = ToralAutomorphism::cat_map();
  return f;
}

Outcome lyapunov_exactness() {
  const auto t0 = Clock::now();
  const auto c = CocycleSpec::constant(cat().matrix().cast<double>());
  const auto le = lyapunov_extremes(c, cat(), default_seed(2), 100000);
  const double secs = seconds_since(t0);
  const double err = std::abs(le.lambda_plus - std::log((3.0 + std::sqrt(5.0)) / 2.0));
  return {err <= 1e-3 && secs < 5.0,
          fmt("lambda+ = %.8f, |error| = %.2e (<= 1e-3), %.2f s (< 5 s)", le.lambda_plus, err, secs)};
}

Outcome distortion_algebra() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> step(-20, 20);
  const auto cc = fixtures::conjugated_conformal(cat());
  const auto shear = build_shear_rotation(cat(), 0.1, 200, 8);
  const auto grid = CocycleSpec::grid(sample_to_grid(cc.conjugated_by(Matrix{{1.0, 0.8}, {0.0, 1.0}}), 16));
  const CocycleSpec* families[] = {&cc, &shear, &grid};
  long violations = 0;
  double worst_sub = 0.0, worst_refl = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const CocycleSpec& c = *families[t % 3];
    const TorusPoint x = random_point(2, rng);
    const long n = step(rng), k = step(rng);
    const double lhs = qc_distortion(c, cat(), x, n + k);
    const double rhs = qc_distortion(c, cat(), x, k) * qc_distortion(c, cat(), cat().apply(x, k), n);
    const double sub = (lhs - rhs) / rhs;
    const double kn = qc_distortion(c, cat(), x, n);
    const double refl = std::abs(qc_distortion(c, cat(), cat().apply(x, n), -n) - kn) / kn;
    worst_sub = std::max(worst_sub, sub);
    worst_refl = std::max(worst_refl, refl);
    if (sub > 1e-10 || refl > 1e-10) ++violations;
  }
  return {violations == 0,
          fmt("%d triples, %ld violations; max relative excess %.1e, max reflection error %.1e (slack 1e-10)",
              trials, violations, worst_sub, worst_refl)};
}

Outcome symmetric_space_axioms() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int trials = 1000;
  long isometry = 0, contra = 0, sandwich = 0, triangle = 0, midpoint = 0;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int d = 2 + t % 3;
    const Matrix a = fixtures::random_structure(d, rng);
    const Matrix b = fixtures::random_structure(d, rng);
    const Matrix c = fixtures::random_structure(d, rng);
    const Matrix x = fixtures::random_invertible(d, rng);
    const Matrix y = fixtures::random_invertible(d, rng);
    const double e1 = std::abs(cf::dist(cf::pullback(x, a), cf::pullback(x, b)) - cf::dist(a, b));
    const Matrix xy = cf::pullback(Matrix(x * y), a);
    const double e2 = op_norm(xy - cf::pullback(y, cf::pullback(x, a))) / op_norm(xy);
    const auto nc = cf::norm_comparison(a);
    const double e3 = std::max(0.0, cf::dist(a, c) - cf::dist(a, b) - cf::dist(b, c));
    const Matrix mid = cf::geodesic(a, b, 0.5);
    const double e4 = std::abs(cf::dist(a, mid) - cf::dist(mid, b));
    isometry += e1 > 1e-9;
    contra += e2 > 1e-9;
    sandwich += !(nc.sandwich_holds && nc.inverse_norm_bound_holds);
    triangle += e3 > 1e-9;
    midpoint += e4 > 1e-9;
    worst = std::max({worst, e1, e2, e3, e4});
    (void)u;
  }
  const long total = isometry + contra + sandwich + triangle + midpoint;
  return {total == 0, fmt("1000 instances each; violations: isometry %ld, contravariance %ld, sandwich %ld, "
                          "triangle %ld, midpoint %ld; max error %.1e (tol 1e-9)",
                          isometry, contra, sandwich, triangle, midpoint, worst)};
}

Outcome perturbation_lemma() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int d = 2 + t % 3;
    const Matrix c = fixtures::random_structure(d, rng, 1.2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    const double cond = es.eigenvalues()(d - 1) / es.eigenvalues()(0);
    Matrix r = fixtures::random_matrix(d, rng);
    r *= u(rng) / (6.0 * cond) / op_norm(r);
    const auto check = cf::perturbation_bound(c, Matrix(Matrix::Identity(d, d) + r));
    violations += !check.pass;
    if (check.rhs > 0) worst = std::max(worst, check.lhs / check.rhs);
  }
  return {violations == 0, fmt("1000 instances, %ld violations; max lhs/rhs = %.3f", violations, worst)};
}

Outcome distortion_lemma() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  long violations = 0;
  double worst = 0.0;  // how close the ratio comes to a bound, as a fraction of the log-width
  for (int t = 0; t < 1000; ++t) {
    const int d = 2 + t % 3;
    const Matrix a = fixtures::random_invertible(d, rng, 200.0);
    Matrix r = fixtures::random_matrix(d, rng);
    r *= u(rng) / op_norm(r);
    const Matrix b = (t % 2 == 0) ? Matrix(a * (Matrix::Identity(d, d) + r))
                                  : Matrix((Matrix::Identity(d, d) + r) * a);
    const auto out = distortion_comparison(a, b);
    const double ratio = distortion(a) / distortion(b);
    const bool ok = out.pass && ratio >= out.lower * (1 - 1e-12) && ratio <= out.upper * (1 + 1e-12);
    violations += !ok;
    if (out.r > 0) worst = std::max(worst, std::abs(std::log(ratio)) / std::log(out.upper));
  }
  return {violations == 0, fmt("1000 instances with r <= 0.5, %ld violations; max |log ratio| / log bound = %.3f",
                               violations, worst)};
}

Outcome periodic_pipeline() {
  const auto t0 = Clock::now();
  const auto c = fixtures::conjugated_conformal(cat());
  const auto conj = fixtures::conjugator_cond3();
  double cond = 0.0;
  for (const auto& g : uniform_grid(2, 128)) cond = std::max(cond, condition_number(conj(g)));
  const auto scan = periodic_scan(c, cat(), 10);
  const bool scan_ok = scan.sup_k <= cond * cond * (1 + 1e-9) && scan.dim2_checklist.value_or(false);

  const double tol = 1e-8;
  const auto r = recover_invariant_structure(c, cat(), 64, 30, tol);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.field.grid.size(); ++i) {
    const Matrix ci = conj(r.field.grid[i]).inverse();
    worst = std::max(worst, cf::dist(r.field.values[i], cf::normalize(Matrix(ci.transpose() * ci))));
  }
  const double beta_err = std::abs(r.holder_beta - c.holder_beta());
  const double secs = seconds_since(t0);
  const bool ok = scan_ok && r.invariance_residual <= 1e-4 && worst <= 1e-3 && beta_err <= 0.15 && secs < 300;
  return {ok, fmt("%zu orbits up to period 10, sup K_p = %.4f (<= cond^2 = %.4f), checklist %s; "
                  "grid 64^2 depth 30: residual %.1e (<= 1e-4), max dist to known %.1e (<= 1e-3), "
                  "beta fit %.3f vs %.1f; %.1f s (< 300 s)",
                  scan.data.size(), scan.sup_k, cond * cond, scan.dim2_checklist.value_or(false) ? "pass" : "fail",
                  r.invariance_residual, worst, r.holder_beta, c.holder_beta(), secs)};
}

Outcome counterexample() {
  const double eps = 0.1;
  const auto c = build_shear_rotation(cat(), eps, 200, 8);
  const auto& data = *std::get<std::shared_ptr<const ShearRotationData>>(c.payload());
  const auto scan = periodic_scan(c, cat(), 8);
  double moduli_err = 0.0;
  bool diag = true;
  for (const auto& d : scan.data) {
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i)
      moduli_err = std::max(moduli_err, std::abs(std::abs(d.eigenvalues(i)) - 1.0));
    diag = diag && d.diagonal.verdict == Verdict::pass;
  }
  const bool part_a = diag && moduli_err <= 1e-8;

  const TorusPoint z = data.segment.front();
  double formula_err = 0.0;
  for (long n = 1; n <= 150; ++n) {
    const double s = n * eps;
    const double sigma = (s + std::sqrt(s * s + 4.0)) / 2.0;
    formula_err = std::max(formula_err, std::abs(qc_distortion(c, cat(), z, n) - sigma * sigma));
  }
  long first_over = -1;
  double k_final = 0.0;
  for (long n = 1; n <= static_cast<long>(100 / eps); ++n) {
    const double k = std::exp(log_qc_distortion(c, cat(), z, n));
    if (first_over < 0 && k > 100.0 * (1 + 1e-9)) first_over = n;  // K(z, 99) = 100 exactly
    k_final = k;
  }
  const bool part_b = formula_err <= 1e-6 && first_over > 0 && first_over <= static_cast<long>(100 / eps);
  return {part_a && part_b,
          fmt("(a) %zu orbits up to period 8, all diagonalizable: %s, max ||mu|-1| = %.1e (<= 1e-8), margin %.2e; "
              "(b) max |K - sigma+(n eps)^2| over n <= 150 = %.1e (<= 1e-6), K > 100 first at n = %ld, "
              "K(z, 1000) = %.1f",
              scan.data.size(), diag ? "yes" : "no", moduli_err, data.margin, formula_err, first_over, k_final)};
}

Outcome holonomy_bound() {
  const auto c = fixtures::conjugated_conformal(cat());
  std::mt19937_64 rng(808);
  std::vector<TorusPoint> base;
  for (int i = 0; i < 16; ++i) base.push_back(random_point(2, rng));
  const std::vector<double> deltas = {1e-2, 1e-3, 1e-4, 1e-5};
  const double beta = c.holder_beta();
  const double eps = 0.01;
  const auto ladder = holonomy_ladder(c, cat(), base, deltas, beta, eps);
  // Constant from summing the telescoped increments:
  //   |(F^n_x)^-1 F^n_y - Id| <= sum_i |(F^{i+1}_x)^-1| |F_{y_i} - F_{x_i}| |F^i_y|
  //                           <= C3 sup|A^-1| L delta^beta sum_i e^{(3 eps - kappa beta) i}.
  double inv = 0.0;
  for (const auto& g : uniform_grid(2, 128)) inv = std::max(inv, op_norm(evaluate(c, g).inverse()));
  const double rate = std::exp(3 * eps - cat().kappa() * beta);
  const double constant = ladder.c3 * inv * c.holder_const() / (1.0 - rate);
  long violations = 0, runs = 0;
  std::string per_delta;
  for (double d : deltas) {
    double worst = 0.0;
    for (const auto& x : base) {
      ++runs;
      for (double t : holonomy_limit(c, cat(), x, d).trace) {
        violations += t > constant * std::pow(d, beta);
        worst = std::max(worst, t / std::pow(d, beta));
      }
    }
    per_delta += fmt(" %.0e:%.3f", d, worst);
  }
  const bool ok = std::abs(ladder.beta_fit - beta) <= 0.15 && violations == 0 && ladder.warning.empty();
  return {ok, fmt("stable leaves, %ld runs, delta 1e-2..1e-5: fitted exponent %.4f vs beta %.1f (tol 0.15); "
                  "C = %.2f (C3 %.3f, sup|A^-1| %.3f, L %.3f), %ld violations of "
                  "|(F^n_x)^-1 F^n_y - Id| <= C delta^beta at any n; max ratio per delta:%s",
                  runs, ladder.beta_fit, beta, constant, ladder.c3, inv, c.holder_const(), violations,
                  per_delta.c_str())};
}

Outcome adapted_metrics() {
  const auto conf = fixtures::conformal_field();
  const auto cc = fixtures::conjugated_conformal(cat());
  const auto shear = build_shear_rotation(cat(), 0.1, 200, 8);
  const double eps = 0.1;
  const int m = 200;
  const TorusPoint x = default_seed(2);
  std::string detail;
  bool ok = true;
  const std::pair<const char*, const CocycleSpec*> families[] = {{"conformal", &conf}, {"conjugated", &cc}, {"shear", &shear}};
  for (const auto& [name, c] : families) {
    const auto t = adapted_metric(*c, cat(), x, eps, m);
    ok = ok && t.ratios_pass && t.tail_certified && t.comparison_pass;
    detail += fmt("%s: max ratio %.4f (e^{3eps} = %.4f), doubling gap %.1e <= tail %.1e %s; ", name, t.max_ratio,
                  std::exp(3 * eps), t.doubling_gap, t.tail_bound, t.tail_certified ? "ok" : "FAIL");
  }
  detail += fmt("eps = %.1f, M = %d, window |k| <= 10", eps, m);
  return {ok, detail};
}

Outcome livsic() {
  const auto t0 = Clock::now();
  auto phi0 = [](const TorusPoint& y) { return 2.0 + std::cos(2.0 * std::numbers::pi * y[0]); };
  auto a = [&](const TorusPoint& y) { return phi0(cat().step(y)) / phi0(y); };
  LivsicOptions opt;
  opt.resolution = 128;
  opt.orbit_length = 1000000;
  const auto r = livsic_solve(a, cat(), opt);
  const bool cob = !r.obstruction && r.residual <= 1e-3;
  const auto two = livsic_solve([](const TorusPoint&) { return 2.0; }, cat(), opt);
  const bool rejected = two.obstruction && two.obstruction->orbit.period == 1 && two.obstruction->product == 2.0;
  return {cob && rejected,
          fmt("coboundary: grid 128^2, T = 1e6, residual %.2e (<= 1e-3); a = 2: %s (product %.1f at period %d); %.1f s",
              r.residual, rejected ? "rejected at the fixed point" : "NOT rejected",
              two.obstruction ? two.obstruction->product : 0.0, two.obstruction ? two.obstruction->orbit.period : 0,
              seconds_since(t0))};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"Lyapunov exactness", lyapunov_exactness},
      {"distortion algebra", distortion_algebra},
      {"symmetric-space axioms", symmetric_space_axioms},
      {"pull-back perturbation bound", perturbation_lemma},
      {"distortion comparison", distortion_lemma},
      {"periodic data to invariant structure", periodic_pipeline},
      {"counterexample", counterexample},
      {"holonomy bound", holonomy_bound},
      {"adapted metrics", adapted_metrics},
      {"Livsic coboundary", livsic},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
