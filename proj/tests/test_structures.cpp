#include "cocycle/spectral.hpp"
#include "cocycle/structures.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace cocycle;
namespace cf = cocycle::conformal;

namespace {

const ToralAutomorphism& cat() {
  static const ToralAutomorphism f = ToralAutomorphism::cat_map();
  return f;
}

const CocycleSpec& cc() {
  static const CocycleSpec c = fixtures::conjugated_conformal(cat());
  return c;
}

// Invariant conformal structure of the construction: C^{-T} C^{-1}.
Matrix known_structure(const TorusPoint& x) {
  const Matrix ci = fixtures::conjugator_cond3()(x).inverse();
  return cf::normalize(Matrix(ci.transpose() * ci));
}

}  // namespace

TEST_SUITE("structures") {
  TEST_CASE("orbit_structure_set: conformal cocycle fixes Id") {
    const auto s = orbit_structure_set(fixtures::conformal_field(), cat(), {0.3, 0.1}, 12);
    REQUIRE(s.structures.size() == 25);
    for (const auto& m : s.structures) CHECK(op_norm(m - Matrix::Identity(2, 2)) < 1e-12);
    CHECK(*s.diameter < 1e-10);
  }

  TEST_CASE("orbit_structure_set: hyperbolic constant grows linearly") {
    const auto c = CocycleSpec::constant(fixtures::diag2(2.0, 0.5));
    for (int depth : {3, 6, 12}) {
      const auto s = orbit_structure_set(c, cat(), {0.3, 0.1}, depth);
      for (int n = -depth; n <= depth; ++n) {
        const Matrix expected = fixtures::diag2(std::pow(4.0, n), std::pow(4.0, -n));
        const Matrix& got = s.structures[static_cast<std::size_t>(n + depth)];
        CHECK(op_norm(got - expected) <= 1e-12 * op_norm(expected));
      }
      CHECK(*s.diameter == doctest::Approx(2 * depth * std::log(4.0)).epsilon(1e-10));
    }
  }

  TEST_CASE("orbit_structure_set: conjugated conformal diameter bounded by the conjugator") {
    double sup = 0.0;
    for (const auto& g : uniform_grid(2, 64)) {
      const Matrix c = fixtures::conjugator_cond3()(g);
      sup = std::max(sup, cf::dist_to_identity(cf::normalize(Matrix(c.transpose() * c))));
    }
    std::mt19937_64 rng(1);
    for (int depth : {5, 20, 60}) {
      const auto s = orbit_structure_set(cc(), cat(), random_point(2, rng), depth);
      CHECK(*s.diameter <= 2 * sup + 1e-9);
    }
  }

  TEST_CASE("recover: conformal cocycle gives Id") {
    const auto r = recover_invariant_structure(fixtures::conformal_field(), cat(), 8, 10, 1e-8);
    CHECK(r.grid_closed);
    CHECK(r.invariance_residual <= 1e-8);
    for (const auto& v : r.field.values) CHECK(cf::dist_to_identity(v) <= 1e-8);
    CHECK(r.holder_constant);
  }

  TEST_CASE("recover: conjugated conformal matches the known structure") {
    const double tol = 1e-8;
    const auto r = recover_invariant_structure(cc(), cat(), 16, 30, tol);
    CHECK(r.invariance_residual <= 1e-4);
    CHECK(r.exact_residual <= 1e-4);
    CHECK(r.exact_samples > 0);
    for (std::size_t i = 0; i < r.field.grid.size(); ++i) {
      CHECK(cf::is_structure(r.field.values[i]));
      CHECK(cf::dist(r.field.values[i], known_structure(r.field.grid[i])) <= 10 * tol);
    }
    CHECK(r.field.covering_radius == doctest::Approx(std::sqrt(2.0) / 32));
    CHECK(r.depth_movement <= 10 * tol);
    CHECK(r.radius_max <= std::log(3.0) + 1e-6);
  }

  TEST_CASE("recover: equivariant under a constant change of coordinates") {
    // The seed structure moves with the coordinates: Id becomes X^{-1}[Id].
    const double tol = 1e-8;
    const Matrix x{{1.3, 0.4}, {-0.2, 0.9}};
    const Matrix xi = x.inverse();
    const auto a = recover_invariant_structure(cc(), cat(), 8, 30, tol);
    RecoveryOptions opt;
    const Matrix seed = cf::pullback(xi, Matrix(Matrix::Identity(2, 2)));
    opt.tau0 = [seed](const TorusPoint&) { return seed; };
    const auto b = recover_invariant_structure(cc().conjugated_by(x), cat(), 8, 30, tol, opt);
    for (std::size_t i = 0; i < a.field.values.size(); ++i)
      CHECK(cf::dist(b.field.values[i], cf::pullback(xi, a.field.values[i])) <= 10 * tol);
  }

  TEST_CASE("recover: shear rotation is refused with a growth witness") {
    const auto shear = build_shear_rotation(cat(), 0.1, 200, 8);
    try {
      recover_invariant_structure(shear, cat(), 8, 30, 1e-8);
      FAIL("recovery should have been refused");
    } catch (const RecoveryRefused& e) {
      CHECK(e.witness.k > 100.0);
      CHECK(qc_distortion(shear, cat(), e.witness.x, e.witness.n) ==
            doctest::Approx(e.witness.k).epsilon(1e-8));
    }
  }

  TEST_CASE("holonomy: constant cocycle is the identity at every step") {
    Matrix m{{2.0, 1.0}, {1.0, 1.0}};
    const auto h = holonomy_limit(CocycleSpec::constant(m), cat(), {0.2, 0.3}, 1e-3);
    CHECK(h.h == Matrix::Identity(2, 2));
    for (double t : h.trace) CHECK(t == 0.0);
  }

  TEST_CASE("holonomy: conformal cocycle gives a conformal matrix") {
    const auto c = fixtures::conformal_field();
    std::mt19937_64 rng(2);
    std::vector<TorusPoint> base;
    for (int i = 0; i < 4; ++i) base.push_back(random_point(2, rng));
    const std::vector<double> deltas = {1e-2, 1e-3, 1e-4, 1e-5};
    for (Leaf leaf : {Leaf::stable, Leaf::unstable}) {
      for (const auto& x : base) {
        const auto h = holonomy_limit(c, cat(), x, 1e-3, leaf);
        CHECK(fixtures::k_closed_form(h.h) == doctest::Approx(1.0).epsilon(1e-10));
      }
      const auto ladder = holonomy_ladder(c, cat(), base, deltas, 1.0, 0.0, leaf);
      CHECK(std::abs(ladder.beta_fit - 1.0) <= 0.15);
      for (std::size_t i = 0; i < deltas.size(); ++i)
        CHECK(ladder.norms[i] <= ladder.constant * deltas[i] * (1 + 1e-12));
    }
  }

  TEST_CASE("holonomy: composition along one leaf") {
    std::mt19937_64 rng(3);
    for (Leaf leaf : {Leaf::stable, Leaf::unstable}) {
      for (int t = 0; t < 10; ++t) {
        const TorusPoint x = random_point(2, rng);
        const auto xy = holonomy_between(cc(), cat(), x, 0.0, 2e-3, leaf);
        const auto yz = holonomy_between(cc(), cat(), x, 2e-3, 5e-3, leaf);
        const auto xz = holonomy_between(cc(), cat(), x, 0.0, 5e-3, leaf);
        CHECK(op_norm(xy.h * yz.h - xz.h) <= 1e-12);
        CHECK(xz.distance_to_identity == doctest::Approx(op_norm(xz.h - Matrix::Identity(2, 2))));
      }
    }
  }

  TEST_CASE("holonomy: Cauchy rate and the product lemma") {
    std::mt19937_64 rng(4);
    std::vector<TorusPoint> base;
    for (int i = 0; i < 6; ++i) base.push_back(random_point(2, rng));
    const double eps = 0.01;
    const auto ladder = holonomy_ladder(cc(), cat(), base, {1e-2, 1e-3, 1e-4, 1e-5}, 1.0, eps);
    CHECK(ladder.decay_exponent <= 3 * eps - cat().kappa() + 0.15);
    CHECK(ladder.warning.empty());
    CHECK(std::abs(ladder.beta_fit - 1.0) <= 0.15);

    // |(F^i_x)^{-1}| |F^i_y| <= 9 Lambda_i(y) / Lambda_i(x) with lambda a coboundary of
    // a potential in [1, 3], checked along each stable pair.
    const auto h = holonomy_limit(cc(), cat(), base[0], 1e-2);
    TorusPoint xi = base[0];
    Matrix fx = Matrix::Identity(2, 2), fy = Matrix::Identity(2, 2);
    for (std::size_t i = 0; i < h.lemma_products.size() && i < 40; ++i) {
      const TorusPoint yi = stable_neighbor_iterate(cat(), xi, 1e-2, static_cast<long>(i));
      fx = evaluate(cc(), xi) * fx;
      fy = evaluate(cc(), yi) * fy;
      xi = cat().step(xi);
      const double direct = op_norm(fx.inverse()) * op_norm(fy);
      CHECK(h.lemma_products[i] == doctest::Approx(direct).epsilon(1e-9));
      CHECK(direct <= 9.0 * 1.2);
    }
  }

  TEST_CASE("holonomy: divergence is a convergence error") {
    const auto warped = CocycleSpec::conformal(ScalarField::exp_trig(fixtures::cos_term(0.0, 1.0, {1, 0})),
                                               ScalarField::trig(TrigField(0.0)));
    CHECK_THROWS_AS(holonomy_limit(warped, cat(), {0.1, 0.2}, 1e-2, Leaf::stable, 3), ConvergenceError);
  }

  TEST_CASE("adapted metric: identity cocycle closed form") {
    const TorusPoint x = default_seed(2);
    const auto t = adapted_metric(fixtures::identity(), cat(), x, 0.1, 50);
    double series = 0.0;
    for (int m = -50; m <= 50; ++m) series += std::exp(-0.3 * std::abs(m));
    for (const auto& g : t.gram) CHECK(op_norm(g - series * Matrix::Identity(2, 2)) < 1e-12);
    for (double r : t.one_step) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.ratios_pass);
    CHECK(t.comparison_pass);
    CHECK(t.tail_certified);
  }

  TEST_CASE("adapted metric: conformal ratios are one, conjugated within e^{3 eps}") {
    const TorusPoint x = default_seed(2);
    const auto conf = adapted_metric(fixtures::conformal_field(), cat(), x, 0.1, 100);
    for (double r : conf.one_step) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
    const auto t = adapted_metric(cc(), cat(), x, 0.1, 200);
    CHECK(t.ratios_pass);
    CHECK(t.tail_certified);
    CHECK(t.comparison_pass);
    for (double r : t.one_step) CHECK(r <= std::exp(0.3) * 1.001);
  }

  TEST_CASE("adapted metric: rational points are refused") {
    CHECK_THROWS_AS(adapted_metric(cc(), cat(), {0.0, 0.0}, 0.1, 10), PreconditionError);
    CHECK_THROWS_AS(adapted_metric(cc(), cat(), {0.25, 0.75}, 0.1, 10), PreconditionError);
  }
}
