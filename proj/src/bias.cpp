#include "ergo/bias.hpp"

#include "ergo/quadrature.hpp"

#include <cmath>

namespace ergo {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

void require_1d(const Model& model, const PoissonData& poisson, int order) {
  if (model.d != 1 || poisson.dim != 1) {
    throw parameter_error("bias functional: scalar path requires d = 1 (use the tensor oracle)");
  }
  if (poisson.max_order < order) {
    throw parameter_error("bias functional: derivative access up to order " +
                          std::to_string(order) + " required");
  }
}

}  // namespace

double phi1(const Model& model, const PoissonData& poisson, const VectorXd& x) {
  require_1d(model, poisson, 4);
  double b = model.drift_at(x)[0];
  double s = model.diffusion_at(x)(0, 0);
  double s2 = s * s;
  double g2 = poisson.g_deriv(x[0], 2);
  double g3 = poisson.g_deriv(x[0], 3);
  double g4 = poisson.g_deriv(x[0], 4);
  // E[(sigma U)^2] = sigma^2, E[(sigma U)^4] = 3 sigma^4.
  return 0.5 * g2 * b * b + 0.5 * g3 * b * s2 + (1.0 / 24.0) * g4 * 3.0 * s2 * s2;
}

double phi2(const Model& model, const PoissonData& poisson, const VectorXd& x) {
  require_1d(model, poisson, 6);
  double b = model.drift_at(x)[0];
  double s = model.diffusion_at(x)(0, 0);
  double s2 = s * s;
  double total = 0.0;
  for (int k = 3; k <= 6; ++k) {
    int nu = 2 * (k - 3);  // Gaussian power
    int nb = 6 - k;        // drift power
    double gk = poisson.g_deriv(x[0], k);
    double gauss_moment = 1.0;  // E[U^nu] = (nu-1)!!
    for (int m = nu - 1; m > 1; m -= 2) gauss_moment *= m;
    double coeff = binomial(k, nu);
    double fact = 1.0;
    for (int m = 2; m <= k; ++m) fact *= m;
    total += coeff / fact * gk * std::pow(b, nb) * std::pow(s2, k - 3) * gauss_moment;
  }
  return total;
}

double phi1_tensor(const Model& model, const TensorOracle& g_tensors, const VectorXd& x) {
  VectorXd b = model.drift_at(x);
  MatrixXd sig = model.diffusion_at(x);
  MatrixXd cov = sig * sig.transpose();
  double t2 = gaussian_contraction(g_tensors(x, 2), b, cov, 2, 0);
  double t3 = gaussian_contraction(g_tensors(x, 3), b, cov, 1, 2);
  double t4 = gaussian_contraction(g_tensors(x, 4), b, cov, 0, 4);
  return 0.5 * t2 + 0.5 * t3 + t4 / 24.0;
}

double phi2_tensor(const Model& model, const TensorOracle& g_tensors, const VectorXd& x) {
  VectorXd b = model.drift_at(x);
  MatrixXd sig = model.diffusion_at(x);
  MatrixXd cov = sig * sig.transpose();
  double total = 0.0;
  for (int k = 3; k <= 6; ++k) {
    double fact = 1.0;
    for (int m = 2; m <= k; ++m) fact *= m;
    total += binomial(k, 2 * (k - 3)) / fact *
             gaussian_contraction(g_tensors(x, k), b, cov, 6 - k, 2 * (k - 3));
  }
  return total;
}

namespace {

double integrate_against_density(const BuiltinModel& model,
                                 const std::function<double(double)>& fn, double lo, double hi) {
  if (!model.log_invariant_density) {
    throw parameter_error("bias constant: model lacks invariant density metadata");
  }
  auto log_dens = [&model](double x) {
    VectorXd v(1);
    v[0] = x;
    return model.log_invariant_density(v);
  };
  // Clip to the density-supported subrange: beyond it the integrand is pure
  // quadrature noise damped by a vanishing density and contributes less than
  // the tolerance by construction.
  double peak = -std::numeric_limits<double>::infinity();
  const int scan = 1024;
  for (int i = 0; i <= scan; ++i) peak = std::max(peak, log_dens(lo + (hi - lo) * i / scan));
  double a = lo, b = hi;
  const double drop = std::log(1e-13);
  for (int i = 0; i <= scan; ++i) {
    double x = lo + (hi - lo) * i / scan;
    if (log_dens(x) - peak > drop) {
      a = x;
      break;
    }
  }
  for (int i = scan; i >= 0; --i) {
    double x = lo + (hi - lo) * i / scan;
    if (log_dens(x) - peak > drop) {
      b = x;
      break;
    }
  }
  auto dens = [log_dens, peak](double x) { return std::exp(log_dens(x) - peak); };
  double z = integrate(dens, a, b, {1e-11, 500000, 44});
  double num = integrate([&](double x) { return fn(x) * dens(x); }, a, b, {1e-11, 500000, 44});
  return num / z;
}

}  // namespace

double first_order_bias_constant(const BuiltinModel& model, const PoissonData& poisson, double lo,
                                 double hi) {
  return integrate_against_density(
      model,
      [&](double u) {
        VectorXd v(1);
        v[0] = u;
        return phi1(model.model, poisson, v);
      },
      lo, hi);
}

ScalarFn phi1_fn_1d(const BuiltinModel& model, const PoissonData& poisson) {
  if (!model.has_scalar_coeffs) {
    throw parameter_error("phi1_fn_1d: model lacks scalar coefficient access");
  }
  ScalarFn b = model.b1;
  ScalarFn sig = model.sigma1;
  auto g_deriv = poisson.g_deriv;
  // phi1 = 1/2 g'' b^2 + 1/2 g''' b sigma^2 + 1/8 g'''' sigma^4 as a jet;
  // the g^{(k)} jets are shifted derivative tables.
  auto phi_jet = [b, sig, g_deriv](double x) {
    auto g_shift = [&g_deriv, x](int base) {
      Jet j{};
      double fact = 1.0;
      for (int m = 0; m <= Jet::kOrder; ++m) {
        if (m > 0) fact *= m;
        j.a[static_cast<std::size_t>(m)] = (base + m <= 7) ? g_deriv(x, base + m) / fact : 0.0;
      }
      return j;
    };
    Jet bj = Jet::from_scalar_fn(b, x, Jet::kOrder);
    Jet sj = Jet::from_scalar_fn(sig, x, Jet::kOrder);
    Jet s2 = sj * sj;
    return g_shift(2) * bj * bj * 0.5 + g_shift(3) * bj * s2 * 0.5 +
           g_shift(4) * s2 * s2 * 0.125;
  };
  return ScalarFn{[phi_jet](double x) { return phi_jet(x).a[0]; },
                  [phi_jet](double x, int k) { return phi_jet(x).derivative(k); }};
}

double second_order_bias_constant(const BuiltinModel& model, const PoissonData& poisson, double lo,
                                  double hi) {
  // Chain: solve the Poisson equation for f = phi1(g), take its first-order
  // constant, add int phi2 d nu.
  ScalarFn phi1_fn = phi1_fn_1d(model, poisson);
  PoissonData chained = poisson_solve_1d(model, phi1_fn, lo, hi);
  double m_g_phi1 = first_order_bias_constant(model, chained, lo, hi);
  double int_phi2 = integrate_against_density(
      model,
      [&](double u) {
        VectorXd v(1);
        v[0] = u;
        return phi2(model.model, poisson, v);
      },
      lo, hi);
  return 0.5 * (m_g_phi1 + int_phi2);
}

double predicted_variance(const CouplingMeasure& coupling, int marginal_idx, int cross_idx) {
  return 5.0 * coupling.integrate(marginal_idx) - 4.0 * coupling.integrate(cross_idx);
}

std::pair<int, int> register_variance_functionals(CouplingMeasure& coupling, const Model& model,
                                                  const PoissonData& poisson, const MatrixXd& rho) {
  if (model.d != 1) {
    throw parameter_error("register_variance_functionals: 1D models only (scalar Poisson data)");
  }
  auto grad_term = [&model, poisson](const VectorXd& x) {
    MatrixXd sig(1, model.q);
    model.diffusion(x, sig);
    double g1 = poisson.g_deriv(x[0], 1);
    return VectorXd(sig.transpose() * VectorXd::Constant(1, g1));
  };
  int marginal = coupling.register_function(
      "marginal |sigma^T grad g|^2",
      [grad_term](const VectorXd& x, const VectorXd&) { return grad_term(x).squaredNorm(); });
  MatrixXd rho_copy = rho;
  int cross = coupling.register_function(
      "cross <s^T grad g(x), rho s^T grad g(y)>",
      [grad_term, rho_copy](const VectorXd& x, const VectorXd& y) {
        return grad_term(x).dot(rho_copy * grad_term(y));
      });
  return {marginal, cross};
}

}  // namespace ergo
