#pragma once

#include <functional>

namespace ergo {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  long max_intervals = 1000000;
  int max_depth = 48;
};

// Adaptive composite Simpson with interval bisection. Throws quadrature_error
// when the interval budget is exhausted before reaching abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

// Same rule on (a,b] where f may blow up at a: the first cell is refined
// geometrically toward the endpoint until the remaining sliver is below tol.
double integrate_singular_left(const std::function<double(double)>& f, double a, double b,
                               const QuadratureOptions& opts = {});

}  // namespace ergo
