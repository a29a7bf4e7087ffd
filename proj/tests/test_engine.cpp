#include "ergo/builtins.hpp"
#include "ergo/engine.hpp"
#include "ergo/parallel.hpp"

#include <doctest.h>

#include <mutex>

using namespace ergo;

TEST_CASE("euler step basics") {
  BuiltinModel ou = make_ou(1.0);
  VectorXd x(1), zero(1);
  x << 1.0;
  zero << 0.0;
  CHECK(euler_step(ou.model, x, 0.5, zero)[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(euler_step(ou.model, x, 0.0, zero), parameter_error);

  // noise = 0, b = 0: state unchanged
  BuiltinModel mart = make_martingale_1d(ScalarFn::constant(1.0));
  CHECK(euler_step(mart.model, x, 0.25, zero)[0] == doctest::Approx(1.0));
}

TEST_CASE("divergence detection") {
  // dX = +X^3 dt explodes under explicit Euler from x = 3 with gamma = 1.
  Model cubic;
  cubic.d = cubic.q = 1;
  cubic.drift = [](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) {
    out[0] = x[0] * x[0] * x[0];
  };
  cubic.diffusion = [](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) { out(0, 0) = 0.0; };
  StepSchedule sched(1.0, 0.1);
  CorrelationSpec corr = make_correlation_scalar(1.0, 1);
  NoiseStream stream(1, 1, 0);
  PairStepper stepper(cubic, sched, corr);
  VectorXd x0(1);
  x0 << 3.0;
  PairState state(x0);
  bool caught = false;
  try {
    for (int k = 0; k < 100; ++k) stepper.advance(state, stream);
  } catch (const divergence_error& e) {
    caught = true;
    CHECK(e.step() >= 1);
  }
  CHECK(caught);
}

TEST_CASE("pair scheme shared-noise identities") {
  // rho = I, b = 0, sigma constant: X_n - Y_2n stays equal to x0 - y0.
  BuiltinModel mart = make_martingale_1d(ScalarFn::constant(0.8));
  StepSchedule sched(0.5, 1.0 / 3.0);
  CorrelationSpec corr = make_correlation_scalar(1.0, 1);
  NoiseStream stream(1, 9, 0);
  PairStepper stepper(mart.model, sched, corr);
  VectorXd x0(1), y0(1);
  x0 << 2.0;
  y0 << -1.0;
  PairState state(x0, y0);
  for (int k = 0; k < 500; ++k) {
    stepper.advance(state, stream);
    CHECK(state.x[0] - state.y[0] == doctest::Approx(3.0).epsilon(1e-12));
  }

  // identical starts stay identical
  NoiseStream stream2(1, 9, 0);
  PairStepper stepper2(mart.model, sched, corr);
  PairState same(x0, x0);
  for (int k = 0; k < 100; ++k) {
    stepper2.advance(same, stream2);
    // sqrt(g)(Z1+Z2)/sqrt(2) and two sqrt(g/2) half-kicks agree to rounding
    CHECK(same.x[0] == doctest::Approx(same.y[0]).epsilon(1e-12));
  }
}

TEST_CASE("pair scheme rho = 0 decorrelates") {
  // OU, rho = 0: sample correlation of terminal (x, y) near 0 at Gamma ~ 20.
  BuiltinModel ou = make_ou(1.0);
  StepSchedule sched(1.0, 1.0 / 3.0);
  // Gamma_n ~ 1.5 n^{2/3} = 20 at n ~ 49.
  const long n_steps = 49;
  const int reps = 10000;
  CorrelationSpec corr = make_correlation_scalar(0.0, 1);
  std::vector<double> xs(reps), ys(reps);
  parallel_for(reps, default_threads(), [&](long r) {
    NoiseStream stream(1, 1234, static_cast<std::uint64_t>(r));
    PairStepper stepper(ou.model, sched, corr);
    VectorXd x0 = VectorXd::Zero(1);
    PairState state(x0);
    for (long k = 0; k < n_steps; ++k) stepper.advance(state, stream);
    xs[static_cast<std::size_t>(r)] = state.x[0];
    ys[static_cast<std::size_t>(r)] = state.y[0];
  });
  double mx = 0, my = 0;
  for (int i = 0; i < reps; ++i) {
    mx += xs[static_cast<std::size_t>(i)];
    my += ys[static_cast<std::size_t>(i)];
  }
  mx /= reps;
  my /= reps;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < reps; ++i) {
    double dx = xs[static_cast<std::size_t>(i)] - mx;
    double dy = ys[static_cast<std::size_t>(i)] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.05);
}

TEST_CASE("continuous emulation: exact pathwise equality and contraction") {
  BuiltinModel ou = make_ou(1.0);
  CorrelationSpec id = make_correlation_scalar(1.0, 1);

  SUBCASE("identical starts, rho = I: exact equality") {
    NoiseStream stream(1, 4, 0);
    VectorXd x0(1);
    x0 << 0.7;
    simulate_duplicated_continuous(
        ou.model, x0, x0, id, 1e-2, 5.0,
        [](double, const VectorXd& a, const VectorXd& b) { CHECK(a[0] == b[0]); }, stream);
  }

  SUBCASE("linear drift: gap contracts by the exact discrete product") {
    NoiseStream stream(1, 4, 0);
    VectorXd x1(1), x2(1);
    x1 << 2.0;
    x2 << -1.0;
    double dt = 1e-3;
    long steps = 0;
    double final_gap = 0.0;
    simulate_duplicated_continuous(
        ou.model, x1, x2, id, dt, 3.0,
        [&](double, const VectorXd& a, const VectorXd& b) {
          final_gap = a[0] - b[0];
          ++steps;
        },
        stream);
    double expected = 3.0 * std::pow(1.0 - dt, static_cast<double>(steps - 1));
    CHECK(final_gap == doctest::Approx(expected).epsilon(1e-10));
    CHECK(final_gap == doctest::Approx(3.0 * std::exp(-3.0)).epsilon(0.01));
  }

  SUBCASE("dt > T rejected") {
    NoiseStream stream(1, 4, 0);
    VectorXd x0 = VectorXd::Zero(1);
    CHECK_THROWS_AS(simulate_duplicated_continuous(ou.model, x0, x0, id, 2.0, 1.0,
                                                   [](double, const VectorXd&, const VectorXd&) {},
                                                   stream),
                    parameter_error);
  }
}

TEST_CASE("weak error sanity: OU second moment" * doctest::skip(false)) {
  // E X_T^2 -> sigma^2/2 = 1/2; dt = 1e-3, T = 30, 1e4 paths.
  BuiltinModel ou = make_ou(1.0);
  CorrelationSpec id = make_correlation_scalar(1.0, 1);
  const int paths = 10000;
  std::vector<double> terminal(paths);
  parallel_for(paths, default_threads(), [&](long r) {
    NoiseStream stream(1, 900, static_cast<std::uint64_t>(r));
    VectorXd x0 = VectorXd::Zero(1);
    double last = 0.0;
    simulate_duplicated_continuous(
        ou.model, x0, x0, id, 1e-3, 30.0,
        [&](double, const VectorXd& a, const VectorXd&) { last = a[0]; }, stream);
    terminal[static_cast<std::size_t>(r)] = last * last;
  });
  double mean = 0.0;
  for (double v : terminal) mean += v;
  mean /= paths;
  // Var(X^2) = 2 (sigma^2/2)^2 = 1/2 under the stationary law.
  double se = std::sqrt(0.5 / paths);
  CHECK(std::abs(mean - 0.5) < 3.0 * se);
}

TEST_CASE("advance_pair free function matches the stepper") {
  BuiltinModel ou = make_ou(1.0);
  StepSchedule sched(0.7, 0.3);
  CorrelationSpec corr = make_correlation_scalar(0.4, 1);
  VectorXd x0(1);
  x0 << 1.0;

  NoiseStream s1(1, 13, 0), s2(1, 13, 0);
  PairStepper stepper(ou.model, sched, corr);
  PairState a(x0);
  ScheduleAccumulator acc(sched);
  PairState b(x0);
  for (int k = 0; k < 50; ++k) {
    stepper.advance(a, s1);
    advance_pair(b, ou.model, acc, corr, s2);
    CHECK(a.x[0] == b.x[0]);
    CHECK(a.y[0] == b.y[0]);
    CHECK(a.y_mid[0] == b.y_mid[0]);
  }
}

TEST_CASE("polar model: radius settles on the unit circle") {
  // time-average of |r_t - 1| over t in [50, 100] with dt = 1e-3 stays small
  BuiltinModel polar = make_polar_counterexample(1.0, 1.0);
  CorrelationSpec id = make_correlation_scalar(1.0, 2);
  NoiseStream stream(2, 41, 0);
  VectorXd x0(2);
  x0 << 1.0, 0.0;
  KahanSum dev;
  long count = 0;
  simulate_duplicated_continuous(
      polar.model, x0, x0, id, 1e-3, 100.0,
      [&](double t, const VectorXd& a, const VectorXd&) {
        if (t >= 50.0) {
          dev.add(std::abs(a.norm() - 1.0));
          ++count;
        }
      },
      stream);
  CHECK(dev.value() / static_cast<double>(count) < 0.05);
}

TEST_CASE("determinism: same seed, same trajectory") {
  BuiltinModel dw = make_double_well(1.0, 2);
  CorrelationSpec corr = make_correlation_scalar(0.5, 2);
  auto run = [&](std::uint64_t seed) {
    NoiseStream stream(2, seed, 0);
    StepSchedule sched(0.5, 0.25);
    PairStepper stepper(dw.model, sched, corr);
    VectorXd x0(2);
    x0 << 1.0, 0.0;
    PairState state(x0);
    for (int k = 0; k < 200; ++k) stepper.advance(state, stream);
    return state;
  };
  PairState a = run(5), b = run(5), c = run(6);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.y_mid == b.y_mid);
  CHECK(a.x != c.x);
}
