#include "cocycle/conformal.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace cocycle;
namespace cf = cocycle::conformal;

namespace {

Matrix expdiag(double a) { return fixtures::diag2(std::exp(a), std::exp(-a)); }

}  // namespace

TEST_SUITE("conformal") {
  TEST_CASE("normalize: examples, idempotence, errors") {
    CHECK(cf::normalize(Matrix::Identity(2, 2)) == Matrix::Identity(2, 2));
    CHECK(op_norm(cf::normalize(fixtures::diag2(4.0, 1.0)) - fixtures::diag2(2.0, 0.5)) < 1e-15);
    CHECK(op_norm(cf::normalize(Matrix(2.0 * Matrix::Identity(3, 3))) - Matrix::Identity(3, 3)) < 1e-15);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
      const Matrix m = fixtures::random_matrix(3, rng);
      const Matrix g = m.transpose() * m + 0.1 * Matrix::Identity(3, 3);
      const Matrix c = cf::normalize(g);
      CHECK(cf::is_structure(c));
      CHECK(op_norm(cf::normalize(c) - c) < 1e-13);
    }
    CHECK_THROWS_AS(cf::normalize(fixtures::diag2(1.0, -1.0)), DomainError);
    CHECK_THROWS_AS(cf::normalize(Matrix{{1.0, 2.0}, {0.0, 1.0}}), DomainError);
  }

  TEST_CASE("dist: examples") {
    const Matrix id = Matrix::Identity(2, 2);
    CHECK(cf::dist(id, id) == doctest::Approx(0.0));
    CHECK(cf::dist(id, expdiag(2.0)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(cf::dist(id, fixtures::diag2(4.0, 0.25)) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(cf::dist_to_identity(fixtures::diag2(4.0, 0.25)) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }

  TEST_CASE("dist: metric axioms and invariance") {
    std::mt19937_64 rng(2);
    for (int d : {2, 3, 4}) {
      for (int t = 0; t < 100; ++t) {
        const Matrix a = fixtures::random_structure(d, rng);
        const Matrix b = fixtures::random_structure(d, rng);
        const Matrix c = fixtures::random_structure(d, rng);
        const Matrix x = fixtures::random_invertible(d, rng);
        CHECK(cf::dist(a, b) == doctest::Approx(cf::dist(b, a)).epsilon(1e-9));
        CHECK(cf::dist(a, c) <= cf::dist(a, b) + cf::dist(b, c) + 1e-9);
        CHECK(cf::dist(a, a) < 1e-9);
        CHECK(std::abs(cf::dist(cf::pullback(x, a), cf::pullback(x, b)) - cf::dist(a, b)) < 1e-9);
        const Matrix y = fixtures::random_invertible(d, rng);
        CHECK(op_norm(cf::pullback(Matrix(x * y), a) - cf::pullback(y, cf::pullback(x, a))) <
              1e-9 * op_norm(cf::pullback(Matrix(x * y), a)));
      }
    }
  }

  TEST_CASE("norm_comparison: sandwich") {
    const auto id = cf::norm_comparison(Matrix::Identity(2, 2));
    CHECK(id.lower == 0.0);
    CHECK(id.distance == doctest::Approx(0.0));
    CHECK(id.upper == 0.0);
    const auto e = cf::norm_comparison(fixtures::diag2(std::exp(1.0), std::exp(-1.0)));
    CHECK(e.lower == doctest::Approx(1.0).epsilon(1e-14));           // sqrt(1/4) * log e^2
    CHECK(e.distance == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.upper == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.sandwich_holds);
    std::mt19937_64 rng(3);
    for (int d : {2, 3, 5}) {
      for (int t = 0; t < 200; ++t) {
        const auto r = cf::norm_comparison(fixtures::random_structure(d, rng, 2.0));
        CHECK(r.sandwich_holds);
        CHECK(r.inverse_norm_bound_holds);
      }
    }
  }

  TEST_CASE("pullback: examples") {
    const Matrix id = Matrix::Identity(2, 2);
    CHECK(op_norm(cf::pullback(rotation2(0.7), id) - id) < 1e-15);
    CHECK(op_norm(cf::pullback(fixtures::diag2(2.0, 0.5), id) - fixtures::diag2(4.0, 0.25)) < 1e-14);
    std::mt19937_64 rng(4);
    const Matrix c = fixtures::random_structure(2, rng);
    CHECK(op_norm(cf::pullback(Matrix(-3.5 * id), c) - c) < 1e-14);
    CHECK_THROWS_AS(cf::pullback(Matrix::Zero(2, 2), c), DomainError);
  }

  TEST_CASE("geodesic: endpoints, midpoint, constant speed") {
    const Matrix id = Matrix::Identity(2, 2);
    const Matrix c2 = expdiag(1.0);
    CHECK(op_norm(cf::geodesic(id, c2, 0.0) - id) < 1e-14);
    CHECK(op_norm(cf::geodesic(id, c2, 1.0) - c2) < 1e-13);
    CHECK(op_norm(cf::geodesic(id, c2, 0.5) - expdiag(0.5)) < 1e-14);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const Matrix a = fixtures::random_structure(3, rng);
      const Matrix b = fixtures::random_structure(3, rng);
      const double s = u(rng);
      const Matrix g = cf::geodesic(a, b, s);
      CHECK(cf::is_structure(g));
      CHECK(std::abs(cf::dist(a, g) - s * cf::dist(a, b)) < 1e-9);
      const Matrix mid = cf::geodesic(a, b, 0.5);
      CHECK(std::abs(cf::dist(a, mid) - cf::dist(mid, b)) < 1e-9);
    }
  }

  TEST_CASE("perturbation_bound: examples and random instances") {
    const Matrix id = Matrix::Identity(2, 2);
    const auto zero = cf::perturbation_bound(id, id);
    CHECK(zero.lhs == doctest::Approx(0.0));
    CHECK(zero.rhs == 0.0);
    CHECK(zero.pass);
    Matrix a = id;
    a(0, 1) = 0.05;
    const auto e = cf::perturbation_bound(id, a);
    CHECK(e.rhs == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(e.lhs <= e.rhs);
    Matrix big = id;
    big(0, 1) = 0.5;
    CHECK_THROWS_AS(cf::perturbation_bound(id, big), PreconditionError);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
      const Matrix c = fixtures::random_structure(3, rng, 1.0);
      Eigen::SelfAdjointEigenSolver<Matrix> es(c);
      const double cond = es.eigenvalues()(2) / es.eigenvalues()(0);
      Matrix r = fixtures::random_matrix(3, rng);
      r *= u(rng) / (6.0 * cond) / op_norm(r);
      CHECK(cf::perturbation_bound(c, Matrix(Matrix::Identity(3, 3) + r)).pass);
    }
  }

  TEST_CASE("karcher mean of two points is the midpoint") {
    const Matrix id = Matrix::Identity(2, 2);
    const Matrix m = cf::karcher_mean<double>({id, expdiag(1.0)});
    CHECK(op_norm(m - expdiag(0.5)) < 1e-10);
  }

  TEST_CASE("circumcenter: single point, two points, geodesic triple") {
    const Matrix id = Matrix::Identity(2, 2);
    const auto one = cf::circumcenter<double>({expdiag(0.3)});
    CHECK(one.center == expdiag(0.3));
    CHECK(one.radius == 0.0);

    const auto two = cf::circumcenter<double>({id, expdiag(2.0)});
    CHECK(cf::dist(two.center, expdiag(1.0)) < 1e-8);
    CHECK(two.radius == doctest::Approx(1.0).epsilon(1e-8));

    // {C, X[C], X^2[C]} with X = diag(a, 1/a): the set lies on one geodesic.
    const Matrix x = fixtures::diag2(1.7, 1 / 1.7);
    const Matrix c = Matrix{{2.0, 0.3}, {0.3, 0.545}};
    const Matrix c0 = cf::normalize(c);
    const std::vector<Matrix> pts = {c0, cf::pullback(x, c0), cf::pullback(Matrix(x * x), c0)};
    const auto tri = cf::circumcenter(pts);
    // Brute-force oracle over the geodesic through the extremes.
    double best_r = 1e9;
    Matrix best;
    for (int i = 0; i <= 20000; ++i) {
      const Matrix g = cf::geodesic(pts[0], pts[2], i / 20000.0);
      const double r = std::max({cf::dist(g, pts[0]), cf::dist(g, pts[1]), cf::dist(g, pts[2])});
      if (r < best_r) {
        best_r = r;
        best = g;
      }
    }
    CHECK(tri.radius <= best_r + 1e-9);
    CHECK(cf::dist(tri.center, best) < 1e-4);
    CHECK(std::abs(cf::dist(tri.center, pts[0]) - cf::dist(tri.center, pts[2])) < 1e-8);

    // An orthogonal X fixing Id: all three points coincide.
    const std::vector<Matrix> fixed = {id, cf::pullback(rotation2(0.4), id), cf::pullback(rotation2(0.8), id)};
    const auto f = cf::circumcenter(fixed);
    CHECK(cf::dist(f.center, id) < 1e-8);
    CHECK(f.radius < 1e-8);
  }

  TEST_CASE("circumcenter: equivariance and local optimality") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    const double tol = 1e-8;
    for (int t = 0; t < 30; ++t) {
      const int d = 2 + t % 2;
      std::vector<Matrix> pts;
      for (int i = 0; i < 12; ++i) pts.push_back(fixtures::random_structure(d, rng));
      const auto cc = cf::circumcenter(pts, tol);
      for (const auto& p : pts) CHECK(cf::dist(cc.center, p) <= cc.radius + 1e-12);

      const Matrix x = fixtures::random_invertible(d, rng);
      std::vector<Matrix> moved;
      for (const auto& p : pts) moved.push_back(cf::pullback(x, p));
      const auto cm = cf::circumcenter(moved, tol);
      CHECK(cf::dist(cm.center, cf::pullback(x, cc.center)) <= 10 * tol);
      CHECK(std::abs(cm.radius - cc.radius) <= tol);

      // No candidate on the sphere of radius 2 tol around the centre does better.
      const cf::TangentFrame<double> frame(cc.center);
      const auto dim = static_cast<Eigen::Index>(frame.basis.size());
      for (int k = 0; k < 64; ++k) {
        Vector v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = g(rng);
        v *= 2 * tol / v.norm();
        CHECK(cf::max_distance(frame.exp(v), pts) >= cc.radius);
      }
    }
  }

  TEST_CASE("subgradient method agrees with the tangent-ball method") {
    std::mt19937_64 rng(8);
    std::vector<Matrix> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(fixtures::random_structure(2, rng));
    const auto a = cf::circumcenter(pts, 1e-10);
    const auto b = cf::circumcenter(pts, 1e-10, cf::CircumcenterMethod::subgradient, 20000);
    CHECK(b.radius >= a.radius - 1e-12);
    CHECK(b.radius - a.radius < 1e-3);
  }

  TEST_CASE("templates work in long double") {
    using LD = long double;
    using M = cf::Mat<LD>;
    M id = M::Identity(2, 2);
    M c(2, 2);
    c << std::exp(2.0L), 0, 0, std::exp(-2.0L);
    CHECK(static_cast<double>(cf::dist(id, c)) == doctest::Approx(2.0).epsilon(1e-15));
    const M mid = cf::geodesic(id, c, 0.5L);
    CHECK(std::abs(static_cast<double>(mid(0, 0)) - std::exp(1.0)) < 1e-15);
    const auto cc = cf::circumcenter<LD>({id, c}, 1e-12L);
    CHECK(static_cast<double>(cc.radius) == doctest::Approx(1.0).epsilon(1e-11));
  }
}
