#pragma once

#include "ergo/common.hpp"

#include <array>
#include <functional>

namespace ergo {

// Scalar map R -> R with derivative access. Analytic derivatives when given;
// central differences (orders 1..2 composed) otherwise, so high orders should
// come from analytic oracles or the jet recursion below.
struct ScalarFn {
  std::function<double(double)> f;
  std::function<double(double, int)> deriv;  // optional, k >= 1

  double operator()(double x) const { return f(x); }
  double d(double x, int k) const;

  static ScalarFn constant(double c);
  static ScalarFn identity();
  static ScalarFn monomial(int p, double coeff = 1.0);  // coeff * x^p
};

// Truncated Taylor series (jet) at a point, holding value and the next
// kOrder derivatives scaled as Taylor coefficients: a[k] = f^{(k)}/k!.
struct Jet {
  static constexpr int kOrder = 7;
  std::array<double, kOrder + 1> a{};

  static Jet from_scalar_fn(const ScalarFn& fn, double x, int orders);
  static Jet variable(double x);  // jet of t -> x + t

  Jet operator+(const Jet& o) const;
  Jet operator-(const Jet& o) const;
  Jet operator*(const Jet& o) const;
  Jet operator*(double c) const;
  Jet reciprocal() const;  // requires a[0] != 0

  double derivative(int k) const;  // back to f^{(k)}
};

}  // namespace ergo
