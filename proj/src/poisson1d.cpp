#include "ergo/poisson1d.hpp"

#include "ergo/quadrature.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace ergo {

PoissonData poisson_from_metadata(const PoissonSolutionMeta& meta) {
  PoissonData p;
  p.f = meta.f;
  p.nu_f = meta.nu_f;
  ScalarFn g = meta.g;
  p.g_deriv = [g](double x, int k) { return g.d(x, k); };
  return p;
}

namespace {

// Tabulated cumulative integral with exact local hops off the nodes.
struct Table {
  double lo = 0.0, dx = 0.0;
  std::vector<double> vals;
  std::function<double(double)> integrand;

  double operator()(double x) const {
    auto i = static_cast<std::size_t>(std::llround((x - lo) / dx));
    i = std::min(i, vals.size() - 1);
    double xn = lo + static_cast<double>(i) * dx;
    double local = 0.0;
    if (x != xn) local = integrate(integrand, xn, x, {1e-12, 20000, 40});
    return vals[i] + local;
  }
};

struct SolverState {
  Table phi;
  Table mass;  // cumulative of unnormalized rho
  Table ff;    // cumulative of (f - nu f) rho (unnormalized)
  Table gg;    // cumulative of g'
  double z = 0.0;
  double nu_f = 0.0;
};

Table build_cumulative(std::function<double(double)> integrand, double lo, double hi, int n,
                       double anchor_x) {
  Table t;
  t.lo = lo;
  t.dx = (hi - lo) / (n - 1);
  t.vals.assign(static_cast<std::size_t>(n), 0.0);
  t.integrand = std::move(integrand);
  for (std::size_t i = 1; i < t.vals.size(); ++i) {
    double a = lo + (i - 1) * t.dx;
    double b = lo + i * t.dx;
    t.vals[i] = t.vals[i - 1] + integrate(t.integrand, a, b, {1e-12, 50000, 40});
  }
  auto i0 = static_cast<std::size_t>(std::llround((anchor_x - lo) / t.dx));
  i0 = std::min(i0, t.vals.size() - 1);
  double shift =
      t.vals[i0] + integrate(t.integrand, lo + static_cast<double>(i0) * t.dx, anchor_x,
                             {1e-12, 20000, 40});
  for (auto& v : t.vals) v -= shift;
  return t;
}

}  // namespace

PoissonData poisson_solve_1d(const BuiltinModel& model_1d, const ScalarFn& f, double lo, double hi,
                             const Poisson1dOptions& opts) {
  if (model_1d.model.d != 1) throw parameter_error("poisson_solve_1d: model must be 1D");
  if (!model_1d.has_scalar_coeffs) {
    throw parameter_error("poisson_solve_1d: model lacks scalar coefficient access");
  }
  if (!(lo < hi)) throw parameter_error("poisson_solve_1d: need lo < hi");
  const ScalarFn b = model_1d.b1;
  const ScalarFn sig = model_1d.sigma1;
  const double mid = 0.5 * (lo + hi);
  const int n = opts.grid_points;

  // log rho up to a constant: phi(x) - log sigma^2, phi = int 2b/sigma^2.
  auto state = std::make_shared<SolverState>();

  state->phi = build_cumulative(
      [b, sig](double u) {
        double s = sig(u);
        return 2.0 * b(u) / (s * s);
      },
      lo, hi, n, mid);

  auto rho_unnorm = [state, sig](double x) {
    double s = sig(x);
    return std::exp(state->phi(x)) / (s * s);
  };

  state->mass = build_cumulative(rho_unnorm, lo, hi, n, lo);
  state->z = state->mass.vals.back();
  if (!(state->z > 0.0) || !std::isfinite(state->z)) {
    throw quadrature_error("poisson_solve_1d: invariant mass not finite on the range");
  }

  ScalarFn fcopy = f;
  Table f_table = build_cumulative([fcopy, rho_unnorm](double x) { return fcopy(x) * rho_unnorm(x); },
                                   lo, hi, n, lo);
  state->nu_f = f_table.vals.back() / state->z;

  const double nu_f = state->nu_f;
  state->ff = build_cumulative(
      [fcopy, rho_unnorm, nu_f](double x) { return (fcopy(x) - nu_f) * rho_unnorm(x); }, lo, hi, n,
      lo);

  // g'(x) = 2 F(x) / (sigma^2 rho) = 2 F(x) exp(-phi(x)); the unnormalized
  // rho cancels because F is accumulated against the same density.
  auto g_prime = [state](double x) { return 2.0 * state->ff(x) * std::exp(-state->phi(x)); };
  state->gg = build_cumulative(g_prime, lo, hi, n, mid);

  // Derivatives 2..6 by the jet recursion on y' = 2 (f - nu f - b y)/sigma^2.
  auto g_deriv = [state, b, sig, fcopy, g_prime, nu_f](double x, int k) -> double {
    if (k == 0) return state->gg(x);
    double y0 = g_prime(x);
    if (k == 1) return y0;
    Jet bj = Jet::from_scalar_fn(b, x, 6);
    Jet fj = Jet::from_scalar_fn(fcopy, x, 6);
    Jet sj = Jet::from_scalar_fn(sig, x, 6);
    Jet s2 = sj * sj;
    Jet inv_s2 = s2.reciprocal();
    Jet y{};
    y.a[0] = y0;
    for (int m = 0; m <= 5; ++m) {
      Jet rhs = fj - bj * y;
      rhs.a[0] -= nu_f;
      rhs = rhs * inv_s2 * 2.0;
      y.a[static_cast<std::size_t>(m + 1)] = rhs.a[static_cast<std::size_t>(m)] / (m + 1);
    }
    return y.derivative(k - 1);
  };

  // Independent residual check: finite differences of tabulated g against
  // the generator identity on interior nodes. Restricted to the region
  // carrying invariant mass: in the far tails g' = 2F/(sigma^2 rho) divides
  // quadrature noise by a vanishing density, which no finite-precision
  // quadrature can survive, and those points contribute nothing to any
  // nu-integral downstream.
  {
    double dx = (hi - lo) / (n - 1);
    double rho_max = 0.0;
    for (int i = 0; i < n; ++i) rho_max = std::max(rho_max, rho_unnorm(lo + i * dx));
    double worst = 0.0, worst_x = lo;
    int stride = std::max(1, n / 200);
    for (int i = 4; i < n - 4; i += stride) {
      double x = lo + i * dx;
      if (rho_unnorm(x) < 1e-12 * rho_max) continue;
      double gm2 = state->gg(x - 2 * dx), gm1 = state->gg(x - dx), g0 = state->gg(x),
             gp1 = state->gg(x + dx), gp2 = state->gg(x + 2 * dx);
      double d1 = (-gp2 + 8 * gp1 - 8 * gm1 + gm2) / (12 * dx);
      double d2 = (-gp2 + 16 * gp1 - 30 * g0 + 16 * gm1 - gm2) / (12 * dx * dx);
      double s = sig(x);
      double res = 0.5 * s * s * d2 + b(x) * d1 - (fcopy(x) - nu_f);
      if (std::abs(res) > worst) {
        worst = std::abs(res);
        worst_x = x;
      }
    }
    if (worst > opts.residual_tol) {
      throw quadrature_error("poisson_solve_1d: residual " + std::to_string(worst) +
                             " exceeds tolerance at x = " + std::to_string(worst_x));
    }
  }

  PoissonData out;
  out.f = f;
  out.nu_f = nu_f;
  out.g_deriv = g_deriv;
  return out;
}

}  // namespace ergo
