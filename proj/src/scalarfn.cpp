#include "ergo/scalarfn.hpp"

#include <cmath>

namespace ergo {

double ScalarFn::d(double x, int k) const {
  if (k == 0) return f(x);
  if (deriv) return deriv(x, k);
  double h = fd_step(x);
  if (k == 1) return (f(x + h) - f(x - h)) / (2.0 * h);
  if (k == 2) return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
  // Recurse on the first derivative with a widened step; accuracy degrades
  // with order, which is why analytic oracles are preferred.
  double hw = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (k + 2)) *
              std::max(1.0, std::abs(x));
  ScalarFn df{[this, hw](double y) { return (f(y + hw) - f(y - hw)) / (2.0 * hw); }, nullptr};
  return df.d(x, k - 1);
}

ScalarFn ScalarFn::constant(double c) {
  return {[c](double) { return c; }, [](double, int) { return 0.0; }};
}

ScalarFn ScalarFn::identity() {
  return {[](double x) { return x; }, [](double, int k) { return k == 1 ? 1.0 : 0.0; }};
}

ScalarFn ScalarFn::monomial(int p, double coeff) {
  return {[p, coeff](double x) { return coeff * std::pow(x, p); },
          [p, coeff](double x, int k) {
            if (k > p) return 0.0;
            double c = coeff;
            for (int j = 0; j < k; ++j) c *= (p - j);
            return c * std::pow(x, p - k);
          }};
}

Jet Jet::from_scalar_fn(const ScalarFn& fn, double x, int orders) {
  Jet j;
  double fact = 1.0;
  j.a[0] = fn(x);
  for (int k = 1; k <= orders && k <= kOrder; ++k) {
    fact *= k;
    j.a[k] = fn.d(x, k) / fact;
  }
  return j;
}

Jet Jet::variable(double x) {
  Jet j;
  j.a[0] = x;
  j.a[1] = 1.0;
  return j;
}

Jet Jet::operator+(const Jet& o) const {
  Jet r;
  for (int k = 0; k <= kOrder; ++k) r.a[k] = a[k] + o.a[k];
  return r;
}

Jet Jet::operator-(const Jet& o) const {
  Jet r;
  for (int k = 0; k <= kOrder; ++k) r.a[k] = a[k] - o.a[k];
  return r;
}

Jet Jet::operator*(const Jet& o) const {
  Jet r;
  for (int k = 0; k <= kOrder; ++k) {
    double s = 0.0;
    for (int i = 0; i <= k; ++i) s += a[i] * o.a[k - i];
    r.a[k] = s;
  }
  return r;
}

Jet Jet::operator*(double c) const {
  Jet r;
  for (int k = 0; k <= kOrder; ++k) r.a[k] = a[k] * c;
  return r;
}

Jet Jet::reciprocal() const {
  Jet r;
  r.a[0] = 1.0 / a[0];
  for (int k = 1; k <= kOrder; ++k) {
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += a[i] * r.a[k - i];
    r.a[k] = -s / a[0];
  }
  return r;
}

double Jet::derivative(int k) const {
  double fact = 1.0;
  for (int j = 2; j <= k; ++j) fact *= j;
  return a[k] * fact;
}

}  // namespace ergo
