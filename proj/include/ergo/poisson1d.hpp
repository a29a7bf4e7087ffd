#pragma once

#include "ergo/builtins.hpp"
#include "ergo/model.hpp"
#include "ergo/scalarfn.hpp"

namespace ergo {

// Solution data for A g = f - nu(f) in dimension 1 with derivative access up
// to order 6 (analytic oracle or quadrature tables + the ODE jet recursion).
struct PoissonData {
  ScalarFn f;
  double nu_f = 0.0;
  std::function<double(double, int)> g_deriv;  // (x, order 0..6)
  int max_order = 6;
  int dim = 1;

  double g(double x) const { return g_deriv(x, 0); }
};

// From builtin metadata: exact f, nu(f) and analytic g.
PoissonData poisson_from_metadata(const PoissonSolutionMeta& meta);

struct Poisson1dOptions {
  int grid_points = 2001;
  double residual_tol = 1e-6;
};

// Quadrature solver: invariant density from the speed measure, nu(f) by
// quadrature, g' = (2/(sigma^2 rho)) int_lo^x (f - nu f) rho, g by
// quadrature, derivatives 2..6 by the Taylor-jet recursion on the ODE
//   g'' = 2 (f - nu(f) - b g') / sigma^2.
// The residual |(sigma^2/2) g'' + b g' - (f - nu f)| is re-checked with
// finite differences of tabulated g (an independent route) and must stay
// below residual_tol on interior grid points.
PoissonData poisson_solve_1d(const BuiltinModel& model_1d, const ScalarFn& f, double lo, double hi,
                             const Poisson1dOptions& opts = {});

}  // namespace ergo
