#include "ergo/empirical.hpp"
#include "ergo/rng.hpp"

#include <doctest.h>

using namespace ergo;

namespace {

VectorXd v1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}

}  // namespace

TEST_CASE("weighted measure basics") {
  WeightedEmpiricalMeasure m(1);
  int id = m.register_function("id", [](const VectorXd& x) { return x[0]; });

  SUBCASE("single atom") {
    m.update(0.3, v1(4.0));
    CHECK(m.integrate(id) == doctest::Approx(4.0));
    CHECK(m.integrate_one() == 1.0);
  }
  SUBCASE("weighted mean") {
    m.update(1.0, v1(0.0));
    m.update(3.0, v1(2.0));
    CHECK(m.integrate(id) == doctest::Approx(1.5));
  }
  SUBCASE("weights must be positive") {
    CHECK_THROWS_AS(m.update(0.0, v1(1.0)), parameter_error);
  }
}

TEST_CASE("merge equals single pass") {
  Rng rng(3);
  auto fresh = [] {
    WeightedEmpiricalMeasure m(2);
    m.register_function("f", [](const VectorXd& x) { return x[0] * x[0] - x[1]; });
    m.enable_histogram(0, -3.0, 3.0, 16);
    return m;
  };
  WeightedEmpiricalMeasure whole = fresh(), left = fresh(), right = fresh();
  for (int i = 0; i < 500; ++i) {
    VectorXd p(2);
    p << 4.0 * rng.uniform01() - 2.0, 4.0 * rng.uniform01() - 2.0;
    double w = 0.1 + rng.uniform01();
    whole.update(w, p);
    (i < 250 ? left : right).update(w, p);
  }
  left.merge(right);
  CHECK(left.total_weight() == doctest::Approx(whole.total_weight()).epsilon(1e-13));
  CHECK(left.integrate(0) == doctest::Approx(whole.integrate(0)).epsilon(1e-12));
  for (int c = 0; c < 2; ++c) {
    for (int p = 1; p <= 4; ++p) {
      CHECK(left.moment(c, p) == doctest::Approx(whole.moment(c, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("histogram accounts all weight") {
  WeightedEmpiricalMeasure m(1);
  m.enable_histogram(0, -1.0, 1.0, 8);
  Rng rng(4);
  for (int i = 0; i < 300; ++i) m.update(0.5 + rng.uniform01(), v1(4.0 * rng.uniform01() - 2.0));
  const Histogram* h = m.histogram();
  REQUIRE(h != nullptr);
  CHECK(h->total_weight() + h->out_of_range == doctest::Approx(m.total_weight()).epsilon(1e-12));
  CHECK(h->out_of_range > 0.0);
}

TEST_CASE("rr_combine") {
  auto make_pair = [](double half_value, double full_value, int n) {
    WeightedEmpiricalMeasure half(1), full(1);
    half.register_function("f", [](const VectorXd& x) { return x[0]; });
    full.register_function("f", [](const VectorXd& x) { return x[0]; });
    for (int k = 0; k < n; ++k) {
      half.update(0.5, v1(half_value));
      half.update(0.5, v1(half_value));
      full.update(1.0, v1(full_value));
    }
    return std::make_pair(std::move(half), std::move(full));
  };

  SUBCASE("equal measures return the common value") {
    auto [half, full] = make_pair(2.5, 2.5, 10);
    CHECK(rr_combine(half, full, 0, 0) == doctest::Approx(2.5));
  }
  SUBCASE("affine formula") {
    auto [half, full] = make_pair(1.0, 0.0, 10);
    CHECK(rr_combine(half, full, 0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("mismatched prefixes rejected") {
    auto [half, full] = make_pair(1.0, 0.0, 10);
    full.update(1.0, v1(0.0));
    CHECK_THROWS_AS(rr_combine(half, full, 0, 0), parameter_error);
  }
  SUBCASE("linear in f") {
    // 2 nu(af + bg) - nu'(af + bg) = a rr(f) + b rr(g)
    WeightedEmpiricalMeasure half(1), full(1);
    auto f = [](const VectorXd& x) { return x[0]; };
    auto g = [](const VectorXd& x) { return x[0] * x[0]; };
    double a = 2.0, b = -3.0;
    int fi_h = half.register_function("f", f);
    int gi_h = half.register_function("g", g);
    int ci_h = half.register_function("combo", [=](const VectorXd& x) { return a * f(x) + b * g(x); });
    int fi_f = full.register_function("f", f);
    int gi_f = full.register_function("g", g);
    int ci_f = full.register_function("combo", [=](const VectorXd& x) { return a * f(x) + b * g(x); });
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
      double w = 0.2 + rng.uniform01();
      half.update(w / 2, v1(rng.gaussian()));
      half.update(w / 2, v1(rng.gaussian()));
      full.update(w, v1(rng.gaussian()));
    }
    double combo = rr_combine(half, full, ci_h, ci_f);
    double parts = a * rr_combine(half, full, fi_h, fi_f) + b * rr_combine(half, full, gi_h, gi_f);
    CHECK(combo == doctest::Approx(parts).epsilon(1e-12));
  }
}

TEST_CASE("coupling measure merge") {
  Rng rng(6);
  auto fresh = [] {
    CouplingMeasure c(1);
    c.register_function("prod", [](const VectorXd& x, const VectorXd& y) { return x[0] * y[0]; });
    c.register_offdiag_function("gap",
                                [](const VectorXd& x, const VectorXd& y) { return x[0] - y[0]; });
    return c;
  };
  CouplingMeasure whole = fresh(), left = fresh(), right = fresh();
  for (int i = 0; i < 300; ++i) {
    VectorXd x = v1(rng.gaussian()), y = v1(rng.gaussian());
    double w = 0.2 + rng.uniform01();
    whole.update(w, x, y);
    (i % 2 == 0 ? left : right).update(w, x, y);
  }
  left.merge(right);
  CHECK(left.integrate(0) == doctest::Approx(whole.integrate(0)).epsilon(1e-12));
  CHECK(left.integrate_offdiag(0) == doctest::Approx(whole.integrate_offdiag(0)).epsilon(1e-12));
  CHECK(left.diagonal_fraction(1e-4) == doctest::Approx(whole.diagonal_fraction(1e-4)));
}

TEST_CASE("coupling measure and integrated nils") {
  CouplingMeasure c(1);
  int idx = c.register_offdiag_function(
      "gap", [](const VectorXd& x, const VectorXd& y) { return x[0] - y[0]; });

  SUBCASE("single off-diagonal atom") {
    c.update(1.0, v1(2.0), v1(0.5));
    CHECK(integrated_nils(c, idx) == doctest::Approx(1.5));
  }
  SUBCASE("two-atom symmetric coupling averages") {
    c.update(0.5, v1(1.0), v1(3.0));
    c.update(0.5, v1(3.0), v1(1.0));
    CHECK(integrated_nils(c, idx) == doctest::Approx(0.0));
  }
  SUBCASE("diagonal-only mass is degenerate") {
    c.update(1.0, v1(1.0), v1(1.0));
    CHECK(c.diagonal_fraction(1e-6) == doctest::Approx(1.0));
    CHECK_THROWS_AS(integrated_nils(c, idx), parameter_error);
  }
}
