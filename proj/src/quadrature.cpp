#include "ergo/quadrature.hpp"

#include "ergo/common.hpp"

#include <cmath>

namespace ergo {
namespace {

struct Budget {
  long left;
};

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth, const QuadratureOptions& opts,
             Budget& budget) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  if (--budget.left < 0) {
    throw quadrature_error("quadrature: interval budget exhausted near x = " + std::to_string(m));
  }
  double left = simpson(fa, flm, fm, m - a);
  double right = simpson(fm, frm, fb, b - m);
  double err = left + right - whole;
  // Relative floor: integrand evaluations may carry quadrature jitter of
  // their own, which must not trigger endless bisection.
  double floor = 5e-15 * (std::abs(left) + std::abs(right));
  if (depth >= opts.max_depth || std::abs(err) <= std::max(15.0 * tol, floor)) {
    return left + right + err / 15.0;
  }
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, opts, budget) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, opts, budget);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
    throw quadrature_error("quadrature: non-finite integrand on [" + std::to_string(a) + "," +
                           std::to_string(b) + "]");
  }
  Budget budget{opts.max_intervals};
  double whole = simpson(fa, fm, fb, b - a);
  return sign * adapt(f, a, b, fa, fm, fb, whole, opts.abs_tol, 0, opts, budget);
}

double integrate_singular_left(const std::function<double(double)>& f, double a, double b,
                               const QuadratureOptions& opts) {
  if (!(a < b)) throw parameter_error("integrate_singular_left: need a < b");
  // Geometric shells 2^{-k}(b-a) toward a; stop when a shell contributes less
  // than the tolerance (or the shell count cap is hit).
  double total = 0.0;
  double hi = b;
  double len = b - a;
  QuadratureOptions cell = opts;
  cell.abs_tol = opts.abs_tol / 4.0;
  for (int k = 0; k < 2048; ++k) {
    double lo = a + len * std::pow(0.5, k + 1);
    if (lo >= hi) break;
    double piece = integrate(f, lo, hi, cell);
    total += piece;
    hi = lo;
    if (std::abs(piece) < opts.abs_tol * 0.25 && k > 4) return total;
    if (hi - a < 1e-300) break;
  }
  return total;
}

}  // namespace ergo
