#pragma once

#include "ergo/empirical.hpp"
#include "ergo/gaussmoments.hpp"
#include "ergo/model.hpp"
#include "ergo/poisson1d.hpp"

namespace ergo {

// First-order bias integrand (Gaussian increments):
//   phi1 = 1/2 D^2g b^{(x)2} + 1/2 E[D^3g b (sigma U)^{(x)2}]
//        + 1/24 E[D^4g (sigma U)^{(x)4}].
double phi1(const Model& model, const PoissonData& poisson, const VectorXd& x);

// Second-order bias integrand:
//   phi2 = sum_{k=3}^6 C(k, 2(k-3))/k! E[D^k g b^{(x)(6-k)} (sigma U)^{(x)2(k-3)}].
double phi2(const Model& model, const PoissonData& poisson, const VectorXd& x);

// General-d variants driven by an explicit derivative-tensor oracle
// (scalar g with dense symmetric tensors); used by the tensor tests and any
// model that can supply tensors.
using TensorOracle = std::function<SymTensor(const VectorXd&, int order)>;
double phi1_tensor(const Model& model, const TensorOracle& g_tensors, const VectorXd& x);
double phi2_tensor(const Model& model, const TensorOracle& g_tensors, const VectorXd& x);

// phi1 as a scalar function with derivative access, built by jet arithmetic
// from the model coefficients and g derivatives (for chained Poisson solves).
ScalarFn phi1_fn_1d(const BuiltinModel& model, const PoissonData& poisson);

// m_g^{(1)} = int phi1 d nu by quadrature against the model's invariant
// density (1D, density metadata required).
double first_order_bias_constant(const BuiltinModel& model, const PoissonData& poisson, double lo,
                                 double hi);

// m_g^{(2)} = 1/2 (m_{g_{phi1}} + int phi2 d nu); the inner constant needs a
// chained Poisson solve, so d = 1 only.
double second_order_bias_constant(const BuiltinModel& model, const PoissonData& poisson, double lo,
                                  double hi);

// CLT variance of the extrapolated estimator:
//   sigma_rho^2 = 5 int |sigma^T grad g|^2 d nu
//               - 4 int <(sigma^T grad g)(x), rho (sigma^T grad g)(y)> d mu^rho.
// The first term comes from the marginal accumulator (index marginal_idx on
// the coupling's x-marginal), the second from the coupling accumulator
// (bivariate index cross_idx).
double predicted_variance(const CouplingMeasure& coupling, int marginal_idx, int cross_idx);

// Registers the two integrands on a fresh coupling measure; returns their
// indices (marginal |sigma^T grad g|^2(x), cross psi(x,y)).
std::pair<int, int> register_variance_functionals(CouplingMeasure& coupling, const Model& model,
                                                  const PoissonData& poisson, const MatrixXd& rho);

}  // namespace ergo
