#include "ergo/builtins.hpp"
#include "ergo/criteria.hpp"
#include "ergo/hormander.hpp"
#include "ergo/nils.hpp"
#include "ergo/oned.hpp"
#include "ergo/quadrature.hpp"
#include "ergo/rng.hpp"

#include <Eigen/Eigenvalues>

#include <doctest.h>

using namespace ergo;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

VectorXd random_point(Rng& rng, int d, double scale) {
  VectorXd x(d);
  for (int k = 0; k < d; ++k) x[k] = scale * (2.0 * rng.uniform01() - 1.0);
  return x;
}

}  // namespace

TEST_CASE("nils closed forms at 1e-10") {
  Rng rng(21);

  SUBCASE("ou is constant -1") {
    BuiltinModel ou = make_ou(1.3);
    MetricS s = MetricS::identity(1);
    VectorXd x(1), y(1);
    x << 0.4;
    y << -2.0;
    CHECK(nils(ou.model, s, x, y) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("double well, 1000 random pairs") {
    BuiltinModel dw = make_double_well(1.0, 2);
    MetricS s = MetricS::identity(2);
    for (int i = 0; i < 1000; ++i) {
      VectorXd x = random_point(rng, 2, 3.0), y = random_point(rng, 2, 3.0);
      if ((x - y).norm() < 1e-6) continue;
      double numeric = nils(dw.model, s, x, y);
      double closed = dw.closed_form_nils(x, y);
      CHECK(std::abs(numeric - closed) < 1e-10 * (1.0 + std::abs(closed)));
    }
    // spec probe: x = (2,0), y = (0,1)
    CHECK(nils(dw.model, s, vec2(2, 0), vec2(0, 1)) ==
          doctest::Approx(dw.closed_form_nils(vec2(2, 0), vec2(0, 1))).epsilon(1e-10));
  }

  SUBCASE("baxendale, 1000 random pairs with theta offsets") {
    BuiltinModel bax = make_baxendale(1.0, -2.0, 3.0, 0.4, -0.7);
    MetricS s(bax.metadata_S);
    for (int i = 0; i < 1000; ++i) {
      VectorXd x = random_point(rng, 2, 3.0), y = random_point(rng, 2, 3.0);
      if ((x - y).norm() < 1e-6) continue;
      double numeric = nils(bax.model, s, x, y);
      double closed = bax.closed_form_nils(x, y);
      CHECK(std::abs(numeric - closed) < 1e-10 * (1.0 + std::abs(closed)));
      CHECK(closed < 0.0);
    }
  }

  SUBCASE("symmetry is exact") {
    BuiltinModel dw = make_double_well(0.7, 3);
    MetricS s = MetricS::identity(3);
    for (int i = 0; i < 100; ++i) {
      VectorXd x = random_point(rng, 3, 2.0), y = random_point(rng, 3, 2.0);
      if ((x - y).norm() < 1e-6) continue;
      CHECK(nils(dw.model, s, x, y) == nils(dw.model, s, y, x));
    }
  }

  SUBCASE("diagonal input rejected") {
    BuiltinModel ou = make_ou(1.0);
    MetricS s = MetricS::identity(1);
    VectorXd x(1);
    x << 1.0;
    CHECK_THROWS_AS(nils(ou.model, s, x, x), std::domain_error);
  }
}

TEST_CASE("psi identities") {
  Rng rng(22);
  BuiltinModel bax = make_baxendale(1.0, -2.0, 3.0);
  MetricS s(bax.metadata_S);
  ThetaFunction one = ThetaFunction::one();
  ThetaFunction zero = ThetaFunction::zero();

  for (int i = 0; i < 200; ++i) {
    VectorXd x = random_point(rng, 2, 2.5), y = random_point(rng, 2, 2.5);
    if ((x - y).norm() < 1e-5) continue;
    VectorXd diff = x - y;
    double d2 = diff.dot(s.S() * diff);

    // theta = 1 recovers Lambda_S |x-y|_S^2 (the A^(2) phi = 2 f' Psi link).
    CHECK(psi(bax.model, s, one, x, y) ==
          doctest::Approx(nils(bax.model, s, x, y) * d2).epsilon(1e-12));

    // theta = 0 drops the directional term.
    VectorXd bx = bax.model.drift_at(x), by = bax.model.drift_at(y);
    MatrixXd sx = bax.model.diffusion_at(x), sy = bax.model.diffusion_at(y);
    double expected =
        (bx - by).dot(s.S() * diff) + 0.5 * ((sx - sy).transpose() * s.S() * (sx - sy)).trace();
    CHECK(psi(bax.model, s, zero, x, y) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("sigma constant: psi independent of theta") {
    BuiltinModel dw = make_double_well(1.0, 2);
    MetricS id = MetricS::identity(2);
    VectorXd x = vec2(0.3, -1.0), y = vec2(1.4, 0.2);
    CHECK(psi(dw.model, id, one, x, y) ==
          doctest::Approx(psi(dw.model, id, zero, x, y)).epsilon(1e-13));
  }
}

TEST_CASE("pseudo-scale closed forms") {
  SUBCASE("theta = 1: f = log u") {
    PseudoScale ps(ThetaFunction::one());
    for (double u : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 37.0, 1e3}) {
      CHECK(std::abs(ps.f(u) - std::log(u)) < 1e-9);
      CHECK(ps.f_prime(u) == doctest::Approx(1.0 / u).epsilon(1e-9));
      CHECK(ps.g(u) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("theta = 0: f = u - 1") {
    PseudoScale ps(ThetaFunction::zero());
    for (double u : {1e-6, 0.25, 1.0, 10.0, 1e3}) {
      CHECK(std::abs(ps.f(u) - (u - 1.0)) < 1e-9);
      CHECK(ps.g(u) == doctest::Approx(u).epsilon(1e-9));
    }
  }
  SUBCASE("f(1) = 0 for any theta") {
    PseudoScale ps(ThetaFunction::constant(0.37));
    CHECK(ps.f(1.0) == 0.0);
    // strictly increasing, positive derivative
    double prev = ps.f(0.01);
    for (double u : {0.1, 0.5, 1.0, 2.0, 8.0}) {
      CHECK(ps.f(u) > prev);
      prev = ps.f(u);
      CHECK(ps.f_prime(u) > 0.0);
    }
  }
}

TEST_CASE("theta condition checks") {
  SUBCASE("theta = 1") {
    auto rep = check_theta_conditions(ThetaFunction::one());
    CHECK(rep.cond_i);
    CHECK_FALSE(rep.integrable_at_zero);
  }
  SUBCASE("theta = 0.5") {
    auto rep = check_theta_conditions(ThetaFunction::constant(0.5));
    CHECK(rep.cond_i);
    CHECK(rep.integrable_at_zero);
    CHECK(rep.theta0_sup == doctest::Approx(0.5));
    REQUIRE(rep.kappa_bound.has_value());
    CHECK(*rep.kappa_bound > 1.0);  // (theta-1) log u = 0.5 log(1/u) >> 1 on the grid
  }
  SUBCASE("theta = 2 fails (i)") {
    auto rep = check_theta_conditions(ThetaFunction::constant(2.0));
    CHECK_FALSE(rep.cond_i);
  }
}

TEST_CASE("scale function and speed measure") {
  SUBCASE("martingale model: p(x) = x - x0") {
    BuiltinModel mart = make_martingale_1d(ScalarFn::constant(1.0));
    OneDimTheory t = scale_speed_1d(mart.model, 0.5, -4.0, 4.0, 801);
    for (double x : {-3.0, -1.0, 0.5, 2.0}) {
      CHECK(t.p(x) == doctest::Approx(x - 0.5).epsilon(1e-10));
    }
    CHECK(t.p(0.5) == 0.0);
  }

  SUBCASE("ou: p(x) = int_0^x exp(xi^2) dxi") {
    BuiltinModel ou = make_ou(1.0);
    OneDimTheory t = scale_speed_1d(ou.model, 0.0, -3.0, 3.0, 601);
    CHECK(t.p_prime(0.0) == doctest::Approx(1.0).epsilon(1e-10));
    // series oracle for int_0^1 e^{xi^2} d xi = sum 1/(n!(2n+1))
    double series = 0.0, fact = 1.0;
    for (int n = 0; n < 25; ++n) {
      if (n > 0) fact *= n;
      series += 1.0 / (fact * (2 * n + 1));
    }
    CHECK(t.p(1.0) == doctest::Approx(series).epsilon(1e-9));
    CHECK(t.p(0.0) == 0.0);
    // strictly increasing on the grid
    double prev = t.p(-3.0);
    for (double x = -2.9; x <= 3.0; x += 0.1) {
      CHECK(t.p(x) > prev);
      prev = t.p(x);
    }
    CHECK(t.p_diverges_pos());
    CHECK(t.p_diverges_neg());
    // speed mass = int e^{-x^2} approximately sqrt(pi) on a wide range
    OneDimTheory wide = scale_speed_1d(ou.model, 0.0, -6.0, 6.0, 601);
    CHECK(wide.speed_mass() == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-8));
  }

  SUBCASE("speed mass finiteness evidence") {
    BuiltinModel ou = make_ou(1.0);
    CHECK(scale_speed_1d(ou.model, 0.0, -6.0, 6.0, 301).speed_mass_tail_negligible());
    // b = 0, sigma = 1: speed density is flat, mass keeps growing with the
    // window (null recurrent)
    BuiltinModel flat = make_martingale_1d(ScalarFn::constant(1.0));
    CHECK_FALSE(scale_speed_1d(flat.model, 0.0, -6.0, 6.0, 301).speed_mass_tail_negligible());
  }

  SUBCASE("interior singularity reported with its location") {
    Model bad;
    bad.d = bad.q = 1;
    bad.drift = [](Eigen::Ref<const VectorXd>, Eigen::Ref<VectorXd> out) { out[0] = 1.0; };
    bad.diffusion = [](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
      out(0, 0) = x[0];
    };
    CHECK_THROWS_AS(scale_speed_1d(bad, 1.0, -1.0, 2.0, 301), quadrature_error);
  }
}

TEST_CASE("diagonal nils") {
  SUBCASE("ou: -1") {
    BuiltinModel ou = make_ou(1.0);
    VectorXd x(1);
    x << 0.3;
    CHECK(diagonal_nils(ou.model, MetricS::identity(1), x).value ==
          doctest::Approx(-1.0).epsilon(1e-10));
  }
  SUBCASE("double well at |x| = 1: inf -2, sup 0") {
    BuiltinModel dw = make_double_well(1.0, 2);
    MetricS s = MetricS::identity(2);
    CHECK(diagonal_nils(dw.model, s, vec2(1, 0)).value == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(diagonal_nils_sup(dw.model, s, vec2(1, 0)).value ==
          doctest::Approx(0.0).epsilon(1e-6));
    // rotation invariance of the rotationally equivariant model
    double base = diagonal_nils(dw.model, s, vec2(1, 0)).value;
    for (double phi : {0.4, 1.1, 2.7}) {
      CHECK(diagonal_nils(dw.model, s, vec2(std::cos(phi), std::sin(phi))).value ==
            doctest::Approx(base).epsilon(1e-6));
    }
  }
  SUBCASE("sigma constant reduces to the generalized eigenvalue") {
    BuiltinModel dw = make_double_well(0.8, 3);
    MatrixXd sm(3, 3);
    sm << 2.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 1.0;
    MetricS s(sm);
    VectorXd x(3);
    x << 0.7, -0.4, 1.2;
    MatrixXd jb = dw.model.jacobian_at(x);
    MatrixXd m = s.S() * jb;
    m += m.transpose().eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(m, s.S());
    double expected = 0.5 * ges.eigenvalues().minCoeff();
    CHECK(diagonal_nils(dw.model, s, x).value == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("necessary condition") {
  BuiltinModel ou = make_ou(1.0);
  MetricS s = MetricS::identity(1);
  std::vector<VectorXd> samples;
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    VectorXd x(1);
    x << rng.gaussian();
    samples.push_back(x);
  }
  auto rep = necessary_condition(ou.model, s, samples);
  CHECK(rep.estimate == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(rep.negative_within_2se);
  CHECK_THROWS_AS(necessary_condition(ou.model, s, {}), parameter_error);
}

TEST_CASE("smooth criterion sup") {
  MetricS s1 = MetricS::identity(1);
  BuiltinModel ou = make_ou(1.0);
  auto rep = smooth_criterion_sup(ou.model, s1, Box::cube(1, -5.0, 5.0), 11);
  CHECK(rep.sup_estimate == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(rep.negative);

  BuiltinModel dw = make_double_well(1.0, 2);
  auto rep2 = smooth_criterion_sup(dw.model, MetricS::identity(2), Box::cube(2, -2.0, 2.0), 9);
  CHECK(rep2.sup_estimate > 0.0);  // J_b(0) = I
  CHECK_FALSE(rep2.negative);
}

TEST_CASE("compact set criterion") {
  BuiltinModel ou = make_ou(1.0);
  auto rep = compact_set_criterion(ou.model, MetricS::identity(1), 4.0, 0.5, 9);
  CHECK(rep.pair_condition);          // (b(x)-b(y))(x-y) = -(x-y)^2 < 0
  CHECK(rep.differential_condition);  // J + J^T = -2 < 0

  BuiltinModel dw = make_double_well(1.0, 2);
  auto rep2 = compact_set_criterion(dw.model, MetricS::identity(2), 2.0, 0.1, 9);
  CHECK_FALSE(rep2.pair_condition);  // expanding near the origin
  CHECK_FALSE(rep2.differential_condition);
}

TEST_CASE("directional ellipticity") {
  SUBCASE("constant sigma fails") {
    BuiltinModel dw = make_double_well(1.0, 2);
    auto rep = directional_ellipticity(dw.model, MetricS::identity(2), 0.5, 2000,
                                       Box::cube(2, -2.0, 2.0));
    CHECK(rep.eta0 == doctest::Approx(0.0));
  }
  SUBCASE("1d rank-one noise: alpha0 = |l|") {
    double ell = 0.6;
    Model m = make_rank_one_noise(
        1, [](Eigen::Ref<const VectorXd>, Eigen::Ref<VectorXd> out) { out.setZero(); },
        [ell](const VectorXd&) { return VectorXd::Constant(1, ell); }, MatrixXd::Zero(1, 1));
    auto rep = directional_ellipticity(m, MetricS::identity(1), 0.5, 4000, Box::cube(1, -2.0, 2.0));
    CHECK(rep.alpha0 == doctest::Approx(ell).epsilon(1e-9));
  }
  SUBCASE("polar tangential part vanishes at matched radii") {
    // The rotation column x -> c(-x2, x1) is skew, so its contribution to
    // (sigma^T(x)-sigma^T(y))(x-y) is zero on the circle.
    BuiltinModel polar = make_polar_counterexample(1.0, 1.0);
    MetricS s = MetricS::identity(2);
    for (double a : {0.2, 1.0, 2.2}) {
      VectorXd x = vec2(std::cos(a), std::sin(a));
      VectorXd y = vec2(std::cos(a + 1.0), std::sin(a + 1.0));
      MatrixXd diff = polar.model.diffusion_at(x) - polar.model.diffusion_at(y);
      double q = (diff.transpose() * (x - y)).norm();
      CHECK(q < 1e-12);
    }
  }
}

TEST_CASE("envelope verification") {
  BuiltinModel dw = make_double_well(1.0, 2);
  MetricS s = MetricS::identity(2);
  SUBCASE("paper envelope holds") {
    auto rep = verify_envelope(dw.model, s, 1.0, 1.0, 2.0, 4000, Box::cube(2, -3.0, 3.0));
    CHECK_FALSE(rep.violated);
    CHECK(rep.max_violation <= 1e-10);
  }
  SUBCASE("absurd envelope violated near the origin") {
    auto rep = verify_envelope(dw.model, s, 1.0, -10.0, 2.0, 4000, Box::cube(2, -0.5, 0.5));
    CHECK(rep.violated);
  }
  SUBCASE("skew rotation drift: Lambda = 0, equality envelope") {
    Model rot;
    rot.d = 2;
    rot.q = 2;
    rot.drift = [](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) {
      out[0] = -x[1];
      out[1] = x[0];
    };
    rot.diffusion = [](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
      out.setIdentity();
    };
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
      VectorXd x = random_point(rng, 2, 2.0), y = random_point(rng, 2, 2.0);
      if ((x - y).norm() < 1e-6) continue;
      CHECK(nils(rot, s, x, y) == doctest::Approx(0.0).epsilon(1e-12));
    }
    auto rep = verify_envelope(rot, s, 1e-12, 0.0, 2.0, 1000, Box::cube(2, -2.0, 2.0));
    CHECK(rep.max_violation <= 1e-9);
  }
}

TEST_CASE("hormander rank") {
  SUBCASE("elliptic: rank d from the A_j alone") {
    BuiltinModel dw = make_double_well(1.0, 3);
    VectorXd x(3);
    x << 0.4, -0.2, 1.0;
    CHECK(hormander_rank(dw.model, x, 1) == 3);
  }
  SUBCASE("sigma = 0: no spanned directions") {
    Model det;
    det.d = det.q = 1;
    det.drift = [](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) { out[0] = 1.0 + x[0]; };
    det.diffusion = [](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) { out(0, 0) = 0.0; };
    VectorXd x(1);
    x << 0.5;
    CHECK(hormander_rank(det, x, 2) <= 1);
  }
  SUBCASE("polar counterexample spans the plane at (0.5, 0)") {
    BuiltinModel polar = make_polar_counterexample(1.0, 1.0);
    CHECK(hormander_rank(polar.model, vec2(0.5, 0.0), 1) == 2);
    CHECK(hormander_rank(polar.model, vec2(0.5, 0.0), 3) == 2);
  }
  SUBCASE("bracket length cap enforced") {
    BuiltinModel ou = make_ou(1.0);
    VectorXd x(1);
    x << 0.0;
    CHECK_THROWS_AS(hormander_rank(ou.model, x, 4), parameter_error);
  }
}

TEST_CASE("pathwise confluence probe") {
  SUBCASE("identical starts give zero gaps") {
    BuiltinModel ou = make_ou(1.0);
    VectorXd x(1);
    x << 1.0;
    auto reps = pathwise_confluence_probe(ou.model, {{x, x}}, make_correlation_scalar(1.0, 1),
                                          1e-2, 5.0, nullptr, 3);
    CHECK(reps[0].terminal_gap == 0.0);
    CHECK(reps[0].time_avg_gap == 0.0);
  }
  SUBCASE("kolmogorov quartic contracts under shared noise") {
    BuiltinModel kol = make_builtin("kolmogorov_quartic", {{"sigma", 1.0}});
    VectorXd a(1), b(1);
    a << -2.0;
    b << 2.0;
    auto reps = pathwise_confluence_probe(kol.model, {{a, b}}, make_correlation_scalar(1.0, 1),
                                          1e-3, 50.0, nullptr, 5);
    CHECK_FALSE(reps[0].diverged);
    CHECK(reps[0].terminal_gap < 1e-3);
  }
}

TEST_CASE("generator helper on a grid") {
  // A V(x) = (b | grad V) + 1/2 Tr(sigma sigma^T D^2 V); OU with V = x^2
  // gives -2x^2 + sigma^2.
  BuiltinModel ou = make_ou(1.3);
  auto vals = generator_on_grid(ou.model, [](const VectorXd& x) { return x[0] * x[0]; },
                                Box::cube(1, -2.0, 2.0), 9);
  for (const auto& [x, av] : vals) {
    CHECK(av == doctest::Approx(-2.0 * x[0] * x[0] + 1.69).epsilon(1e-4));
  }
}

TEST_CASE("pathwise probe reports scale-image gaps") {
  BuiltinModel ou = make_ou(1.0);
  OneDimTheory theory = scale_speed_1d(ou.model, 0.0, -6.0, 6.0, 601);
  VectorXd a(1), b(1);
  a << -1.5;
  b << 1.5;
  auto scale_map = [&theory](double x) { return theory.p(x); };
  auto reps = pathwise_confluence_probe(ou.model, {{a, b}}, make_correlation_scalar(1.0, 1),
                                        1e-3, 25.0, scale_map, 11);
  CHECK_FALSE(reps[0].diverged);
  CHECK(reps[0].terminal_gap < 1e-6);     // linear contraction e^{-25}
  CHECK(reps[0].terminal_p_gap < 1e-3);   // p is locally Lipschitz on the bulk
  CHECK(reps[0].time_avg_p_gap < 1e-2);
}

TEST_CASE("double-well sign integral (d = 2 quick check)") {
  // int (1 - |x|^2) exp(-2U/sigma^2) dx < 0; radial closed form for d = 2 is
  // -(sigma^2/2) exp(-1/(2 sigma^2)) * 2 pi.
  BuiltinModel dw = make_double_well(1.0, 2);
  double sigma = 1.0;
  auto radial = [sigma](double r) {
    return (1.0 - r * r) * r * std::exp(-std::pow(r * r - 1.0, 2) / (2.0 * sigma * sigma));
  };
  double value = 2.0 * M_PI * integrate(radial, 0.0, 6.0, {1e-12, 200000, 44});
  double closed = -M_PI * sigma * sigma * std::exp(-1.0 / (2.0 * sigma * sigma));
  CHECK(value == doctest::Approx(closed).epsilon(1e-8));
  CHECK(value < 0.0);
  (void)dw;
}
