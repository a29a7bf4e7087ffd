#pragma once

#include "ergo/model.hpp"
#include "ergo/scalarfn.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ergo {

// Known Poisson pair: A g = f - nu(f), with analytic derivative access.
struct PoissonSolutionMeta {
  std::string f_name;
  ScalarFn f;
  double nu_f = 0.0;
  ScalarFn g;
};

// A model plus whatever closed-form knowledge comes with it.
struct BuiltinModel {
  std::string name;
  Model model;

  // Invariant density up to an additive constant in log scale, when known.
  std::function<double(const VectorXd&)> log_invariant_density;

  // Closed-form NILS exponent w.r.t. metadata_S, when known.
  MatrixXd metadata_S;
  std::function<double(const VectorXd&, const VectorXd&)> closed_form_nils;

  std::vector<PoissonSolutionMeta> poisson;

  // 1D coefficient access with derivatives (model.d == 1 only).
  bool has_scalar_coeffs = false;
  ScalarFn b1, sigma1;

  // Baxendale extras.
  double bax_lambda = 0.0;
  double bax_alpha = 0.0;

  const PoissonSolutionMeta& poisson_for(const std::string& f_name) const;
};

BuiltinModel make_ou(double sigma);
BuiltinModel make_double_well(double sigma, int d);
BuiltinModel make_polar_counterexample(double theta, double c);
BuiltinModel make_baxendale(double a, double b, double sigma, double theta_x = 0.0,
                            double theta_y = 0.0);
BuiltinModel make_kolmogorov_1d(const ScalarFn& uprime, double sigma,
                                std::function<double(double)> potential = nullptr);
BuiltinModel make_martingale_1d(const ScalarFn& sigma_fn);

// sigma(x) = x (x) lambda(x)^T + sigma0. No invariant-density metadata: the
// source example only states an existence condition, not an explicit density.
Model make_rank_one_noise(int d, std::function<void(Eigen::Ref<const VectorXd>, Eigen::Ref<VectorXd>)> b,
                          std::function<VectorXd(const VectorXd&)> lambda, const MatrixXd& sigma0);

// CLI-facing catalog: builtin selection by name + numeric parameter map.
BuiltinModel make_builtin(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> builtin_names();

}  // namespace ergo
