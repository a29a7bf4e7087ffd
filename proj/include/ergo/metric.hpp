#pragma once

#include "ergo/common.hpp"

#include <functional>
#include <optional>
#include <string>

namespace ergo {

// Positive-definite S with cached square root; carries |.|_S, (.|.)_S and
// the matrix norm ||A||_S^2 = Tr(A^T S A).
class MetricS {
 public:
  explicit MetricS(const MatrixXd& s);
  static MetricS identity(int d);
  static MetricS diagonal(const VectorXd& diag);

  const MatrixXd& S() const { return s_; }
  const MatrixXd& sqrt_S() const { return sqrt_s_; }
  const MatrixXd& inv_sqrt_S() const { return inv_sqrt_s_; }
  int dim() const { return static_cast<int>(s_.rows()); }

  double inner(const VectorXd& x, const VectorXd& y) const { return x.dot(s_ * y); }
  double norm2(const VectorXd& x) const { return x.dot(s_ * x); }
  double norm(const VectorXd& x) const { return std::sqrt(norm2(x)); }
  double mat_norm2(const MatrixXd& a) const { return (a.transpose() * s_ * a).trace(); }

 private:
  MatrixXd s_, sqrt_s_, inv_sqrt_s_;
};

// Continuous theta: (0, infinity) -> R_+ parameterizing the pseudo-scale.
struct ThetaFunction {
  std::string name;
  std::function<double(double)> fn;

  double operator()(double u) const { return fn(u); }

  static ThetaFunction constant(double value);
  static ThetaFunction one() { return constant(1.0); }
  static ThetaFunction zero() { return constant(0.0); }
};

// Pseudo-scale f_theta(u) = int_1^u exp(int_xi^1 theta(w)/w dw) dxi and
// g_theta(u) = u f_theta'(u). The inner integral is cached on a log grid.
class PseudoScale {
 public:
  explicit PseudoScale(ThetaFunction theta, double u_min = 1e-7, double u_max = 2e3,
                       int grid_points = 3000);

  double inner_integral(double u) const;  // int_u^1 theta(w)/w dw
  double f(double u) const;
  double f_prime(double u) const { return std::exp(inner_integral(u)); }
  double g(double u) const { return u * f_prime(u); }

  const ThetaFunction& theta() const { return theta_; }

 private:
  ThetaFunction theta_;
  double t_lo_, t_hi_;  // log-grid range
  std::vector<double> grid_;  // inner integral at exp(t) nodes
};

struct ThetaConditionReport {
  bool cond_i = false;              // limsup_{u->0} int_u^1 (theta-1)/w dw < inf (grid evidence)
  bool integrable_at_zero = false;  // int_0^1 f_theta' < inf (grid evidence)
  std::optional<double> kappa_bound;  // inf over grid of (theta(u)-1) log u
  double theta0_sup = 0.0;            // sup of theta on the small-u grid
  double tail_value = 0.0;            // last value of int_u^1 (theta-1)/w dw
  int grid_levels = 0;
  bool inconclusive = false;
};

// Numerical evidence for the admissibility conditions on theta; grid-limited,
// never a proof.
ThetaConditionReport check_theta_conditions(const ThetaFunction& theta, int max_level = 40);

}  // namespace ergo
