#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helidiff/catalog.hpp"
#include "helidiff/classification.hpp"
#include "helidiff/errors.hpp"

using namespace helidiff;
using std::numbers::pi;

// Reference values below come from tests/oracles/derive_values.py (sympy).

namespace {

VectorField3 field(const char* name) { return *catalog_operator(name).vector_field(); }

Vec3 random_vec(std::mt19937_64& rng, double lo = -3.0, double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

// J^{12} = exp(x^1 x^3), J^{34} = 1 (0-based pairs (0,1) and (2,3)).
OperatorField block4(bool exact) {
  auto eval = [exact](std::span<const double> x, std::span<double> u) {
    std::fill(u.begin(), u.end(), 0.0);
    u[0] = exact ? std::exp(x[1]) : std::exp(x[0] * x[2]);
    u[5] = 1.0;
  };
  auto deriv = [exact](std::span<const double> x, std::span<double> d) {
    std::fill(d.begin(), d.end(), 0.0);
    if (exact) {
      d[1 * 6 + 0] = std::exp(x[1]);
    } else {
      const double e = std::exp(x[0] * x[2]);
      d[0 * 6 + 0] = x[2] * e;
      d[2 * 6 + 0] = x[0] * e;
    }
  };
  return OperatorField(4, eval, deriv);
}

}  // namespace

TEST_CASE("helicity density") {
  std::mt19937_64 rng(1);
  for (int s = 0; s < 100; ++s) {
    const Vec3 x = random_vec(rng);
    CHECK(helicity_density(field("uniform_z"), x) == 0.0);
    CHECK(helicity_density(field("beltrami"), x) == doctest::Approx(2.0).epsilon(1e-14));
  }
  CHECK(helicity_density(field("antisym"), {pi / 2, 0.0, 0.7}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(helicity_density(field("spiral"), {0, 0, 0}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(helicity_density(field("spiral"), {0.4, 1.3, -0.8}) == doctest::Approx(0.65736509474692340).epsilon(1e-13));
  CHECK(helicity_density(field("unit_norm"), {0.7, 0.3, 0.0}) == doctest::Approx(0.51080697018953680).epsilon(1e-13));
  CHECK(helicity_density(field("landau_lifshitz"), {0.3, 0.4, 1.5}) ==
        doctest::Approx(-0.87959999999999994).epsilon(1e-13));
}

TEST_CASE("field force") {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 100; ++s) {
    const Vec3 x = random_vec(rng);
    CHECK(norm(field_force(field("beltrami"), x)) <= 1e-14);
    CHECK(norm(field_force(field("grad_casimir"), x)) <= 1e-14);
    CHECK(norm(field_force(field("spiral"), x)) <= 1e-14);
  }
  const Vec3 b = field_force(field("antisym"), {0, 0, 0});
  CHECK(b == Vec3{1.0, -1.0, 0.0});
  // FD curl cross-check of the same value.
  const VectorField3 fd([](const Vec3& x) { return field("antisym")(x); });
  const Vec3 bf = field_force(fd, {0, 0, 0});
  CHECK(norm(bf - b) <= 1e-7);

  const Vec3 bu = field_force(field("unit_norm"), {0.7, 0.3, 0.0});
  CHECK(bu[0] == doctest::Approx(-0.036401202928536089).epsilon(1e-12));
  CHECK(bu[1] == doctest::Approx(0.24498499216584146).epsilon(1e-12));
  CHECK(bu[2] == doctest::Approx(-0.51637572123511377).epsilon(1e-12));

  // Normalized force of a unit field equals the plain force.
  const Vec3 bn = field_force(field("unit_norm"), {0.7, 0.3, 0.0}, true);
  CHECK(norm(bn - bu) <= 1e-12);
  const VectorField3 zero([](const Vec3&) { return Vec3{}; });
  CHECK_THROWS_AS(field_force(zero, {0, 0, 0}, true), NotApplicable);
}

TEST_CASE("field charge 3D") {
  CHECK(field_charge_3d(field("antisym"), {pi / 2, 0, 0}) == doctest::Approx(-4.0).epsilon(1e-5));
  CHECK(std::abs(field_charge_3d(field("beltrami"), {0.3, 1.0, -2.0})) <= 1e-10);
  CHECK(std::abs(field_charge_3d(field("unit_norm"), {0.7, 0.3, 0.0}) - (-1.5662938450421946)) <= 1e-4);
  CHECK(std::abs(field_charge_3d(field("unit_norm"), {1.2, -0.4, 0.5}) - 3.0056156971049086) <= 1e-4);
  CHECK(std::abs(field_charge_3d(field("landau_lifshitz"), {-0.7, 0.2, 0.9}) - (-2.3491087667033521)) <= 1e-4);
}

TEST_CASE("curl decomposition") {
  std::mt19937_64 rng(3);
  CHECK(curl_decomposition_residual(field("uniform_z"), {0.1, 0.2, 0.3}) == 0.0);
  for (const auto& name : catalog_names()) {
    const auto op = catalog_operator(name);
    if (!op.vector_field()) continue;
    CAPTURE(name);
    double worst = 0.0;
    for (int s = 0; s < 1000; ++s) {
      Vec3 x = random_vec(rng);
      if (norm(x) < 0.1) continue;
      worst = std::max(worst, curl_decomposition_residual(*op.vector_field(), x));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("jacobi residual") {
  std::mt19937_64 rng(4);
  const auto sym = catalog_operator("symplectic", {{"m", 2}}).as_operator();
  const auto euler = catalog_operator("euler_rigid_body").as_operator();
  const auto bel = catalog_operator("beltrami");
  for (int s = 0; s < 100; ++s) {
    const Vec3 x = random_vec(rng);
    const double x4[4] = {x[0], x[1], x[2], 0.5};
    CHECK(jacobi_residual(sym, x4) == 0.0);
    CHECK(jacobi_residual(euler, as_span(x)) <= 1e-10);
    const double r = jacobi_residual(bel.as_operator(), as_span(x));
    CHECK(r >= 1.0);
    CHECK(r == doctest::Approx(std::abs(helicity_density(*bel.vector_field(), x))).epsilon(1e-12));
  }
}

TEST_CASE("jacobi residual matches |h| for every 3D operator") {
  std::mt19937_64 rng(5);
  for (const auto& name : catalog_names()) {
    const auto op = catalog_operator(name);
    if (!op.vector_field()) continue;
    CAPTURE(name);
    for (int s = 0; s < 200; ++s) {
      Vec3 x = random_vec(rng);
      if (norm(x) < 0.1) continue;
      const double h = std::abs(helicity_density(*op.vector_field(), x));
      CHECK(std::abs(jacobi_residual(op.as_operator(), as_span(x)) - h) <= 1e-12 * std::max(1.0, h));
    }
  }
}

TEST_CASE("cocurrent residual") {
  const double p[3] = {0.7, 0.3, 0.2};
  const auto lgc = catalog_operator("lambda_grad_casimir");
  const Vector c1 = cocurrent(lgc.as_operator(), VolumeWeight::unit(), p);
  CHECK(c1[0] == doctest::Approx(0.0));
  CHECK(c1[1] == doctest::Approx(0.39137411326416283).epsilon(1e-12));
  CHECK(c1[2] == doctest::Approx(-0.11565895883372392).epsilon(1e-12));

  // Curl identity in 3D: c = curl w with g = 1.
  std::mt19937_64 rng(6);
  for (const auto& name : {"antisym", "spiral", "unit_norm"}) {
    const auto op = catalog_operator(name);
    for (int s = 0; s < 50; ++s) {
      const Vec3 x = random_vec(rng);
      const Vector c = cocurrent(op.as_operator(), VolumeWeight::unit(), as_span(x));
      const Vec3 cw = op.vector_field()->curl(x);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(c[k] - cw[k]) <= 1e-13);
    }
  }

  const auto g = VolumeWeight::from(lgc.invariant_density, "1/lambda");
  const auto gc = catalog_operator("grad_casimir");
  double worst_g = 0.0, worst_unit = 0.0, worst_gc = 0.0, best_unit = 0.0;
  for (int s = 0; s < 500; ++s) {
    const Vec3 x = random_vec(rng);
    worst_g = std::max(worst_g, cocurrent(lgc.as_operator(), g, as_span(x)).cwiseAbs().maxCoeff());
    const double u = cocurrent(lgc.as_operator(), VolumeWeight::unit(), as_span(x)).cwiseAbs().maxCoeff();
    worst_unit = std::max(worst_unit, u);
    best_unit = std::max(best_unit, u);
    worst_gc = std::max(worst_gc, cocurrent(gc.as_operator(), VolumeWeight::unit(), as_span(x)).cwiseAbs().maxCoeff());
  }
  CHECK(worst_g <= 1e-6);
  CHECK(worst_gc == 0.0);
  CHECK(best_unit > 1e-2);
}

TEST_CASE("invariant measure of lambda grad C holds for polynomial energies") {
  const auto lgc = catalog_operator("lambda_grad_casimir");
  const auto& w = *lgc.vector_field();
  const auto& g = lgc.invariant_density;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    // Random cubic polynomial H(x, y, z).
    std::array<double, 20> c{};
    for (auto& v : c) v = coef(rng);
    auto grad_h = [c](const Vec3& x) {
      const Hamiltonian h(3, [c](std::span<const double> p) {
        const double X = p[0], Y = p[1], Z = p[2];
        const double mono[20] = {1, X, Y, Z, X * X, Y * Y, Z * Z, X * Y, X * Z, Y * Z,
                                 X * X * X, Y * Y * Y, Z * Z * Z, X * X * Y, X * X * Z, Y * Y * X,
                                 Y * Y * Z, Z * Z * X, Z * Z * Y, X * Y * Z};
        double s = 0.0;
        for (int k = 0; k < 20; ++k) s += c[k] * mono[k];
        return s;
      });
      const Vector v = h.gradient(as_span(x));
      return Vec3{v[0], v[1], v[2]};
    };
    auto flux = [&](const Vec3& x) {
      const double gp[3] = {x[0], x[1], x[2]};
      return g(gp) * cross(w(x), grad_h(x));
    };
    for (int s = 0; s < 50; ++s) {
      const Vec3 x = random_vec(rng, -1.5, 1.5);
      const double h = 1e-3;
      double div = 0.0;
      for (int k = 0; k < 3; ++k) {
        Vec3 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        div += (flux(xp)[k] - flux(xm)[k]) / (2 * h);
      }
      CHECK(std::abs(div) <= 1e-4);
    }
  }
}

TEST_CASE("field charge nD") {
  const auto anti = catalog_operator("antisym").as_operator();
  const double p[3] = {pi / 2, 0.0, 0.0};
  CHECK(std::abs(field_charge_nd(anti, VolumeWeight::unit(), p) - (-4.0)) <= 1e-3);

  std::mt19937_64 rng(8);
  const auto bel = catalog_operator("beltrami").as_operator();
  const auto lgc = catalog_operator("lambda_grad_casimir");
  const auto g = VolumeWeight::from(lgc.invariant_density, "1/lambda");
  for (int s = 0; s < 100; ++s) {
    const Vec3 x = random_vec(rng);
    CHECK(std::abs(field_charge_nd(bel, VolumeWeight::unit(), as_span(x))) <= 1e-6);
    CHECK(std::abs(field_charge_nd(lgc.as_operator(), g, as_span(x))) <= 1e-6);
  }

  // 3D consistency against the vector-form charge.
  for (const auto& name : catalog_names()) {
    const auto op = catalog_operator(name);
    if (!op.vector_field()) continue;
    CAPTURE(name);
    double worst = 0.0;
    for (int s = 0; s < 1000; ++s) {
      Vec3 x = random_vec(rng);
      if (norm(x) < 0.2) continue;
      worst = std::max(worst, std::abs(field_charge_nd(op.as_operator(), VolumeWeight::unit(), as_span(x)) -
                                       field_charge_3d(*op.vector_field(), x)));
    }
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("measure preserving implies zero field force") {
  std::mt19937_64 rng(9);
  const auto lgc = catalog_operator("lambda_grad_casimir");
  const auto g = VolumeWeight::from(lgc.invariant_density, "1/lambda");
  const auto ext = extend_to_measure_preserving(catalog_operator("antisym").as_operator());
  for (int s = 0; s < 100; ++s) {
    const Vec3 x = random_vec(rng);
    CHECK(field_force_nd(lgc.as_operator(), g, as_span(x)).norm() <= 1e-6);
    const double y[4] = {x[0], x[1], x[2], 0.8};
    CHECK(field_force_nd(ext, VolumeWeight::unit(), y).norm() <= 1e-6);
  }
}

TEST_CASE("closure test") {
  const auto sym = catalog_operator("symplectic", {{"m", 2}}).as_operator();
  const double p4[4] = {0.1, 0.2, 0.3, 0.4};
  CHECK(closure_test(sym, p4) == 0.0);

  const OperatorField two(
      2, [](std::span<const double> x, std::span<double> u) { u[0] = 1.0 + x[0]; },
      [](std::span<const double>, std::span<double> d) {
        d[0] = 1.0;
        d[1] = 0.0;
      });
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int s = 0; s < 100; ++s) {
    const double x[2] = {u(rng), u(rng)};
    CHECK(closure_test(two, x) <= 1e-6);
    const Vector A = closure_potential(two, x);
    CHECK(A[0] == doctest::Approx(-1.0 / (1.0 + x[0])).epsilon(1e-12));
    CHECK(A[1] == 0.0);
  }

  // Non-exact potential A = (-x^3, 0, 0, 0): |dA| = 1 everywhere.
  const auto open = block4(false);
  const auto closed = block4(true);
  for (int s = 0; s < 50; ++s) {
    const double x[4] = {u(rng) - 1, u(rng) - 1, u(rng) - 1, u(rng) - 1};
    CHECK(closure_test(open, x) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(closure_test(open, x) > 1e-3);
    CHECK(closure_test(closed, x) <= 1e-6);
    const Vector A = closure_potential(open, x);
    CHECK(A[0] == doctest::Approx(-x[2]).epsilon(1e-12));
  }

  const auto bel = catalog_operator("beltrami").as_operator();
  CHECK_THROWS_AS(closure_test(bel, p4), NotApplicable);
  const OperatorField singular(2, [](std::span<const double>, std::span<double> u) { u[0] = 0.0; });
  const double z[2] = {0, 0};
  CHECK_THROWS_AS(closure_test(singular, z), NotApplicable);
}

TEST_CASE("measure preserving extension") {
  std::mt19937_64 rng(11);
  for (const char* name : {"antisym", "beltrami", "grad_casimir", "unit_norm"}) {
    CAPTURE(name);
    const auto J = catalog_operator(name).as_operator();
    const auto X = extend_to_measure_preserving(J);
    REQUIRE(X.dim() == 4);
    double worst = 0.0, extra = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const Vec3 x = random_vec(rng);
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      const double y[4] = {x[0], x[1], x[2], u(rng)};
      worst = std::max(worst, cocurrent(X, VolumeWeight::unit(), y).cwiseAbs().maxCoeff());
      const Matrix mj = J.eval(as_span(x));
      const Matrix mx = X.eval(y);
      CHECK(mx.topLeftCorner(3, 3) == mj);
      extra = std::max(extra, mx.col(3).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-6);
    if (std::string(name) == "grad_casimir") CHECK(extra == 0.0);
  }
}

TEST_CASE("classify assigns the expected labels") {
  SampleSpec spec;
  spec.n_samples = 128;
  spec.seed = 3;

  const auto uz = classify(catalog_operator("uniform_z").as_operator(), VolumeWeight::unit(), spec, "uniform_z");
  CHECK(uz.label == OperatorClass::poisson);
  CHECK(uz.h_stats->max_abs == 0.0);
  CHECK(uz.charge_stats.max_abs == 0.0);

  const auto bel = classify(catalog_operator("beltrami").as_operator(), VolumeWeight::unit(), spec, "beltrami");
  CHECK(bel.label == OperatorClass::strong_beltrami);
  CHECK(bel.jacobi_residual_stats.max_abs == doctest::Approx(2.0).epsilon(1e-12));

  const auto anti = classify(catalog_operator("antisym").as_operator(), VolumeWeight::unit(), spec, "antisym");
  CHECK(anti.label == OperatorClass::general_antisymmetric);

  const auto sym = classify(catalog_operator("symplectic", {{"m", 2}}).as_operator(), VolumeWeight::unit(), spec);
  CHECK(sym.label == OperatorClass::symplectic);

  const auto lgc = catalog_operator("lambda_grad_casimir");
  CHECK(classify(lgc.as_operator(), VolumeWeight::unit(), spec).label == OperatorClass::poisson);

  const auto ext = extend_to_measure_preserving(catalog_operator("antisym").as_operator());
  CHECK(classify(ext, VolumeWeight::unit(), spec).label == OperatorClass::measure_preserving);

  CHECK(classify(catalog_operator("spiral").as_operator(), VolumeWeight::unit(), spec).label ==
        OperatorClass::strong_beltrami);
  CHECK(classify(catalog_operator("unit_norm").as_operator(), VolumeWeight::unit(), spec).label ==
        OperatorClass::general_antisymmetric);

  // Label invariants.
  CHECK(bel.charge_stats.max_abs <= bel.tolerance);
  CHECK(bel.b_norm_stats.max_abs <= bel.tolerance);
  CHECK(uz.jacobi_residual_stats.max_abs <= uz.tolerance);

  const auto js = bel.to_json();
  CHECK(js["label"] == "strong_beltrami");
  CHECK(js["n_samples"] == 128);
  CHECK(js["stats"].contains("helicity"));

  spec.n_samples = 50;
  CHECK_THROWS_AS(classify(catalog_operator("beltrami").as_operator(), VolumeWeight::unit(), spec), ConfigError);
}

TEST_CASE("FD-only operators get the looser tolerance") {
  const auto bel = catalog_operator("beltrami").as_operator();
  const OperatorField fd(3, [bel](std::span<const double> x, std::span<double> u) { bel.eval_upper(x, u); });
  SampleSpec spec;
  spec.n_samples = 100;
  const auto r = classify(fd, VolumeWeight::unit(), spec);
  CHECK(r.tolerance == 1e-3);
  CHECK(r.label == OperatorClass::strong_beltrami);
}

TEST_CASE("sampling is deterministic and respects the excluded ball") {
  SampleSpec spec;
  spec.n_samples = 200;
  spec.lower = {-1, -1, -1};
  spec.upper = {1, 1, 1};
  spec.excluded_radius = 0.5;
  spec.seed = 42;
  const auto a = sample_points(3, spec), b = sample_points(3, spec);
  CHECK(a == b);
  for (const auto& p : a) CHECK(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) >= 0.5);
  spec.seed = 43;
  CHECK(sample_points(3, spec) != a);
}
