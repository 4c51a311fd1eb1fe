#include "cocycle/spectral.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace cocycle;
using fixtures::kGolden;

namespace {

const ToralAutomorphism& cat() {
  static const ToralAutomorphism f = ToralAutomorphism::cat_map();
  return f;
}

Matrix line(double angle) { return Matrix{{std::cos(angle)}, {std::sin(angle)}}; }

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("qc_distortion: examples") {
    const TorusPoint x{0.3, 0.7};
    CHECK(qc_distortion(fixtures::identity(), cat(), x, 17) == doctest::Approx(1.0).epsilon(1e-14));
    const auto d = CocycleSpec::constant(fixtures::diag2(2.0, 0.5));
    CHECK(qc_distortion(d, cat(), x, 1) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(qc_distortion(d, cat(), x, 0) == 1.0);

    const auto shear = build_shear_rotation(cat(), 0.1, 200, 8);
    const auto& data = *std::get<std::shared_ptr<const ShearRotationData>>(shear.payload());
    CHECK(qc_distortion(shear, cat(), data.segment.front(), 10) ==
          doctest::Approx(kGolden * kGolden).epsilon(1e-12));
  }

  TEST_CASE("qc_distortion: long products against closed forms") {
    const auto d = CocycleSpec::constant(fixtures::diag2(2.0, 0.5));
    const TorusPoint x{0.1, 0.2};
    for (long n : {5L, 29L, 31L, 60L}) CHECK(qc_distortion(d, cat(), x, n) == doctest::Approx(std::pow(4.0, n)).epsilon(1e-10));
    CHECK(log_qc_distortion(d, cat(), x, 400) == doctest::Approx(400 * std::log(4.0)).epsilon(1e-12));
    CHECK(log_qc_distortion(d, cat(), x, -400) == doctest::Approx(400 * std::log(4.0)).epsilon(1e-12));

    // Constant shear [[1, s], [0, 1]]^n has K = sigma_+(n s)^2.
    Matrix sh{{1.0, 0.1}, {0.0, 1.0}};
    const auto c = CocycleSpec::constant(sh);
    for (long n : {10L, 45L, 150L}) {
      const double s = 0.1 * n;
      const double sigma = (s + std::sqrt(s * s + 4.0)) / 2.0;
      CHECK(qc_distortion(c, cat(), x, n) == doctest::Approx(sigma * sigma).epsilon(1e-9));
    }
  }

  TEST_CASE("qc_distortion: submultiplicativity, lower chain, reflection") {
    const auto c = fixtures::conjugated_conformal(cat());
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> step(0, 20);
    for (int t = 0; t < 500; ++t) {
      const TorusPoint x = random_point(2, rng);
      const long n = step(rng), k = step(rng);
      const double knk = qc_distortion(c, cat(), x, n + k);
      const double kk = qc_distortion(c, cat(), x, k);
      const double kn_shift = qc_distortion(c, cat(), cat().apply(x, k), n);
      CHECK(knk <= kk * kn_shift * (1 + 1e-10));
      const double kn = qc_distortion(c, cat(), x, n);
      const double kk_shift = qc_distortion(c, cat(), cat().apply(x, n), k);
      CHECK(knk >= kn / kk_shift * (1 - 1e-10));
      CHECK(qc_distortion(c, cat(), cat().apply(x, n), -n) == doctest::Approx(kn).epsilon(1e-10));
      CHECK(kn == doctest::Approx(fixtures::k_closed_form(compose(c, cat(), x, n))).epsilon(1e-9));
    }
  }

  TEST_CASE("lyapunov_extremes: cat map, conformal, identity") {
    const auto& f = cat();
    const TorusPoint z = default_seed(2);
    const double exact = std::log((3.0 + std::sqrt(5.0)) / 2.0);
    const long T = 20000;
    const auto cat_cocycle = CocycleSpec::constant(f.matrix().cast<double>());
    const auto le = lyapunov_extremes(cat_cocycle, f, z, T);
    CHECK(std::abs(le.lambda_plus - exact) <= 10.0 / T);
    CHECK(std::abs(le.lambda_minus + exact) <= 10.0 / T);
    CHECK(le.lambda_plus >= le.lambda_minus);
    CHECK_FALSE(le.convergence_trace.empty());

    // Conformal: both exponents equal the orbit average of log lambda.
    const auto conf = fixtures::conformal_field();
    const auto lambda = ScalarField::exp_trig(fixtures::cos_term(0.0, 0.3, {1, 0}));
    double avg = 0.0;
    TorusPoint y = z;
    for (long i = 0; i < T; ++i) {
      avg += std::log(lambda(y));
      y = f.step(y);
    }
    avg /= T;
    const auto lc = lyapunov_extremes(conf, f, z, T);
    CHECK(std::abs(lc.lambda_plus - avg) < 1e-10);
    CHECK(std::abs(lc.lambda_minus - avg) < 1e-10);

    const auto li = lyapunov_extremes(fixtures::identity(), f, z, 1000);
    CHECK(li.lambda_plus == doctest::Approx(0.0));
    CHECK(li.lambda_minus == doctest::Approx(0.0));
    CHECK_THROWS_AS(lyapunov_extremes(fixtures::identity(), f, z, 50), PreconditionError);
  }

  TEST_CASE("lyapunov_extremes: constant cocycles match eigenvalue moduli within 10/T") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
      const Matrix m = fixtures::random_invertible(3, rng, 50.0);
      Eigen::EigenSolver<Matrix> es(m);
      const Vector logs = es.eigenvalues().cwiseAbs().array().log();
      const long T = 5000;
      IntMatrix base(2, 2);
      base << 2, 1, 1, 1;
      const auto le = lyapunov_extremes(CocycleSpec::constant(m), ToralAutomorphism(base), random_point(2, rng), T);
      CHECK(std::abs(le.lambda_plus - logs.maxCoeff()) <= 10.0 / T);
      CHECK(std::abs(le.lambda_minus - logs.minCoeff()) <= 10.0 / T);
    }
  }

  TEST_CASE("diagonalizability: three-valued certificate") {
    CHECK(diagonalizability(Matrix{{1.0, 1.0}, {0.0, 1.0}}).verdict == Verdict::fail);
    CHECK(diagonalizability(Matrix{{2.0, 1.0}, {0.0, 1.0}}).verdict == Verdict::pass);
    CHECK(diagonalizability(Matrix::Identity(3, 3)).verdict == Verdict::pass);
    CHECK(diagonalizability(rotation2(0.3)).verdict == Verdict::pass);
    // Nearly defective: eigenvalues 1e-9 apart with nearly parallel eigenvectors.
    const auto near = diagonalizability(Matrix{{1.0, 1.0}, {0.0, 1.0 + 1e-9}});
    CHECK(near.verdict == Verdict::indeterminate);
  }

  TEST_CASE("periodic_scan: conformal data is all-pass with K_p = 1") {
    const auto scan = periodic_scan(fixtures::conformal_field(), cat(), 7);
    REQUIRE_FALSE(scan.data.empty());
    for (const auto& d : scan.data) {
      CHECK(d.k_p == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(d.k_p >= 1.0);
      double prod = 1.0;
      for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) prod *= std::abs(d.eigenvalues(i));
      CHECK(prod == doctest::Approx(std::abs(d.return_map.determinant())).epsilon(1e-10));
    }
    REQUIRE(scan.dim2_checklist.has_value());
    CHECK(*scan.dim2_checklist);
    CHECK(scan.all_equal_moduli);
  }

  TEST_CASE("periodic_scan: conjugated conformal bounded by cond^2") {
    const auto scan = periodic_scan(fixtures::conjugated_conformal(cat()), cat(), 8);
    CHECK(scan.sup_k <= 9.0 * (1 + 1e-9));
    CHECK(scan.all_diagonalizable);
    CHECK(scan.all_equal_moduli);
    CHECK(*scan.dim2_checklist);
  }

  TEST_CASE("periodic_scan: return maps along exact orbits") {
    const auto c = fixtures::conjugated_conformal(cat());
    for (const auto& orbit : periodic_points(cat(), 4)) {
      const Matrix direct = compose(c, cat(), orbit.point.to_torus(), orbit.period);
      CHECK(op_norm(return_map(c, orbit) - direct) <= 1e-12 * op_norm(direct));
    }
  }

  TEST_CASE("periodic_scan: shear rotation has unimodular diagonalizable returns") {
    const auto shear = build_shear_rotation(cat(), 0.1, 200, 8);
    const auto scan = periodic_scan(shear, cat(), 8);
    CHECK(scan.all_unit_moduli);
    CHECK(scan.all_diagonalizable);
    CHECK_FALSE(scan.any_indeterminate);
    CHECK_FALSE(scan.dim2_checklist.has_value());
  }

  TEST_CASE("periodic_scan: verdicts invariant under a change of inner product") {
    std::mt19937_64 rng(3);
    const auto base = fixtures::conjugated_conformal(cat());
    Matrix jordan_like{{1.5, 0.7}, {0.2, 0.9}};
    const auto stretched = CocycleSpec::constant(jordan_like);
    for (const CocycleSpec* c : {&base, &stretched}) {
      const auto a = periodic_scan(*c, cat(), 6);
      const auto b = periodic_scan(c->conjugated_by(fixtures::random_invertible(2, rng, 30.0)), cat(), 6);
      REQUIRE(a.data.size() == b.data.size());
      for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(a.data[i].equal_moduli == b.data[i].equal_moduli);
        CHECK(a.data[i].unit_moduli == b.data[i].unit_moduli);
        CHECK(a.data[i].diagonal.verdict == b.data[i].diagonal.verdict);
      }
      CHECK(a.all_equal_moduli == b.all_equal_moduli);
    }
  }

  TEST_CASE("pinching_rate: conformal, hyperbolic constant, conjugated") {
    std::mt19937_64 rng(4);
    std::vector<TorusPoint> samples;
    for (int i = 0; i < 12; ++i) samples.push_back(random_point(2, rng));
    const auto conf = pinching_rate(fixtures::conformal_field(), cat(), samples, 20);
    CHECK(std::abs(conf.gamma) < 1e-12);
    const auto diag = pinching_rate(CocycleSpec::constant(fixtures::diag2(2.0, 0.5)), cat(), samples, 40);
    CHECK(diag.gamma == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    const auto cc = pinching_rate(fixtures::conjugated_conformal(cat()), cat(), samples, 60);
    CHECK(std::abs(cc.gamma) <= 0.05);
    CHECK_THROWS_AS(pinching_rate(fixtures::identity(), cat(), samples, 10), PreconditionError);
  }

  TEST_CASE("distortion_comparison: examples and random instances") {
    const Matrix a = Matrix{{3.0, 1.0}, {0.5, 2.0}};
    const auto same = distortion_comparison(a, a);
    CHECK(same.r < 1e-15);
    CHECK(same.lower == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(same.upper == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(same.pass);

    Matrix b = Matrix::Identity(2, 2);
    b(0, 1) = 0.1;
    const auto e = distortion_comparison(Matrix::Identity(2, 2), b);
    CHECK(e.r == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(e.k_b <= 11.0 / 9.0);
    CHECK(fixtures::k_closed_form(b) <= 11.0 / 9.0);
    CHECK(e.pass);

    CHECK_THROWS_AS(distortion_comparison(Matrix::Identity(2, 2), Matrix{{3.0, 0.0}, {0.0, -2.0}}), PreconditionError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> size(0.0, 0.5);
    for (int t = 0; t < 300; ++t) {
      const Matrix aa = fixtures::random_invertible(3, rng, 100.0);
      Matrix r = fixtures::random_matrix(3, rng);
      r *= size(rng) / op_norm(r);
      const auto out = distortion_comparison(aa, aa * (Matrix::Identity(3, 3) + r));
      CHECK(out.pass);
      const double ratio = distortion(aa) / distortion(aa * (Matrix::Identity(3, 3) + r));
      CHECK(ratio >= out.lower * (1 - 1e-12));
      CHECK(ratio <= out.upper * (1 + 1e-12));
    }
  }

  TEST_CASE("principal angles") {
    CHECK(principal_angle_distance(line(0.3), line(0.3)) == doctest::Approx(0.0));
    CHECK(principal_angle_distance(line(0.1), line(0.5)) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(principal_angle_distance(line(0.1), line(0.1 + std::numbers::pi)) == doctest::Approx(0.0));
    const Matrix plane = Matrix::Identity(3, 2);
    Matrix tilted = plane;
    tilted(2, 1) = std::tan(0.2);
    CHECK(principal_angle_distance(plane, tilted) == doctest::Approx(0.2).epsilon(1e-12));
  }

  TEST_CASE("grassmann_distortion: identical, conformal, diagonal") {
    const TorusPoint x{0.2, 0.4};
    const auto same = grassmann_distortion(fixtures::conformal_field(), cat(), x, 3, line(0.4), line(0.4));
    CHECK_FALSE(same.ratio.has_value());
    CHECK(same.pass);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
    for (int t = 0; t < 100; ++t) {
      const auto g = grassmann_distortion(fixtures::conformal_field(), cat(), x, 5, line(ang(rng)), line(ang(rng)));
      REQUIRE(g.ratio.has_value());
      CHECK(*g.ratio == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(g.pass);
    }

    // diag(2, 1/2) sends the line at angle a to the line at angle atan(tan(a) / 4).
    const auto d = CocycleSpec::constant(fixtures::diag2(2.0, 0.5));
    const double a = std::numbers::pi / 2 - 1e-4, b = std::numbers::pi / 2 - 2e-4;
    const auto g = grassmann_distortion(d, cat(), x, 1, line(a), line(b));
    const double image = std::abs(std::atan(std::tan(a) / 4) - std::atan(std::tan(b) / 4));
    REQUIRE(g.ratio.has_value());
    CHECK(*g.ratio == doctest::Approx(image / 1e-4).epsilon(1e-6));
    CHECK(*g.ratio == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(g.k == doctest::Approx(4.0));
    CHECK(g.pass);

    for (int t = 0; t < 200; ++t) {
      const auto h = grassmann_distortion(fixtures::conjugated_conformal(cat()), cat(), random_point(2, rng), 6,
                                          line(ang(rng)), line(ang(rng)));
      CHECK(h.pass);
    }
  }
}
