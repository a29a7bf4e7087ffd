#include "ergo/metric.hpp"

#include "ergo/quadrature.hpp"
#include "ergo/schedule.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ergo {

MetricS::MetricS(const MatrixXd& s) : s_(0.5 * (s + s.transpose())) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s_);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw parameter_error("MetricS: S must be positive definite");
  }
  sqrt_s_ = matrix_sqrt_psd(s_);
  inv_sqrt_s_ = sqrt_s_.inverse();
}

MetricS MetricS::identity(int d) { return MetricS(MatrixXd::Identity(d, d)); }

MetricS MetricS::diagonal(const VectorXd& diag) {
  MatrixXd s = diag.asDiagonal();
  return MetricS(s);
}

ThetaFunction ThetaFunction::constant(double value) {
  if (value < 0.0) throw parameter_error("ThetaFunction: theta must be non-negative");
  return {"const(" + std::to_string(value) + ")", [value](double) { return value; }};
}

PseudoScale::PseudoScale(ThetaFunction theta, double u_min, double u_max, int grid_points)
    : theta_(std::move(theta)), t_lo_(std::log(u_min)), t_hi_(std::log(u_max)) {
  // In t = log u the inner integral is int_t^0 theta(e^s) ds: a smooth
  // integrand, accumulated once over the grid.
  grid_.resize(static_cast<std::size_t>(grid_points));
  double dt = (t_hi_ - t_lo_) / (grid_points - 1);
  // index of t = 0 reference handled by shifting at the end
  std::vector<double> cumulative(grid_.size(), 0.0);
  auto th = [this](double t) { return theta_(std::exp(t)); };
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    double a = t_lo_ + (i - 1) * dt;
    double b = t_lo_ + i * dt;
    // Simpson on the cell; theta is continuous so this is plenty at this
    // resolution, and f() runs adaptive quadrature on top of it.
    cumulative[i] = cumulative[i - 1] + (b - a) / 6.0 * (th(a) + 4.0 * th(0.5 * (a + b)) + th(b));
  }
  // inner(u) = int_{log u}^{0} theta(e^s) ds = C(0) - C(log u), with C(0)
  // anchored exactly so that f'(1) = 1 holds to quadrature accuracy.
  double at_zero;
  {
    auto i0 = static_cast<std::size_t>(std::llround((0.0 - t_lo_) / dt));
    i0 = std::min(i0, grid_.size() - 1);
    double tn = t_lo_ + i0 * dt;
    at_zero = cumulative[i0] + integrate(th, tn, 0.0, {1e-12, 10000, 32});
  }
  for (std::size_t i = 0; i < grid_.size(); ++i) grid_[i] = at_zero - cumulative[i];
}

double PseudoScale::inner_integral(double u) const {
  if (!(u > 0.0)) throw parameter_error("PseudoScale: u must be > 0");
  double t = std::log(u);
  if (t < t_lo_ || t > t_hi_) {
    // Outside the cached window: extend from the nearest edge by direct
    // quadrature in log coordinates.
    double edge = std::min(std::max(t, t_lo_), t_hi_);
    double base = inner_integral(std::exp(edge));
    double extra = integrate([this](double s) { return theta_(std::exp(s)); }, t, edge,
                             {1e-11, 200000, 40});
    return base + extra;
  }
  // Nearest node plus an exact local correction; the cache only carries the
  // long-range accumulation.
  double dt = (t_hi_ - t_lo_) / (grid_.size() - 1);
  auto i = static_cast<std::size_t>(std::llround((t - t_lo_) / dt));
  if (i >= grid_.size()) i = grid_.size() - 1;
  double tn = t_lo_ + i * dt;
  double local = 0.0;
  if (t != tn) {
    local = integrate([this](double s) { return theta_(std::exp(s)); }, t, tn, {1e-12, 10000, 32});
  }
  return grid_[i] + local;
}

double PseudoScale::f(double u) const {
  if (!(u > 0.0)) throw parameter_error("PseudoScale: u must be > 0");
  if (u == 1.0) return 0.0;
  auto integrand = [this](double xi) { return f_prime(xi); };
  QuadratureOptions opts;
  opts.abs_tol = 1e-10;
  if (u < 1.0) {
    // f' may blow up toward 0; refine geometrically into the left endpoint.
    return -integrate_singular_left(integrand, u, 1.0, opts);
  }
  return integrate(integrand, 1.0, u, opts);
}

ThetaConditionReport check_theta_conditions(const ThetaFunction& theta, int max_level) {
  ThetaConditionReport rep;
  rep.grid_levels = max_level;
  // I(u) = int_u^1 (theta(w)-1)/w dw on u = 2^{-j}; in log coordinates the
  // increment from level j to j+1 is int over one dyadic shell.
  std::vector<double> I(static_cast<std::size_t>(max_level) + 1, 0.0);
  for (int j = 1; j <= max_level; ++j) {
    double a = std::log(std::pow(2.0, -static_cast<double>(j)));
    double b = std::log(std::pow(2.0, -static_cast<double>(j - 1)));
    double shell = integrate([&theta](double s) { return theta(std::exp(s)) - 1.0; }, a, b,
                             {1e-11, 100000, 40});
    I[static_cast<std::size_t>(j)] = I[static_cast<std::size_t>(j - 1)] + shell;
  }
  rep.tail_value = I.back();
  // Bounded-above evidence: increments over the last decade of levels are
  // non-positive up to tolerance.
  double max_late_increment = -1e300;
  for (int j = max_level - 10; j < max_level; ++j) {
    max_late_increment =
        std::max(max_late_increment, I[static_cast<std::size_t>(j + 1)] - I[static_cast<std::size_t>(j)]);
  }
  rep.cond_i = max_late_increment <= 1e-8;

  // Integrability of f' at 0: dyadic shell masses S_j = int_{2^{-(j+1)}}^{2^{-j}} f'.
  // f' can reach astronomic magnitudes near 0, so each shell gets a
  // pilot-scaled tolerance.
  PseudoScale ps(theta, std::pow(2.0, -static_cast<double>(max_level + 2)), 4.0, 4000);
  auto f_prime = [&ps](double v) { return ps.f_prime(v); };
  double prev_shell = -1.0;
  double ratio = 1.0;
  for (int j = max_level - 12; j <= max_level - 1; ++j) {
    double lo = std::pow(2.0, -static_cast<double>(j + 1));
    double hi = std::pow(2.0, -static_cast<double>(j));
    double pilot = (hi - lo) / 6.0 * (f_prime(lo) + 4.0 * f_prime(0.5 * (lo + hi)) + f_prime(hi));
    QuadratureOptions opts{std::max(1e-12, 1e-10 * std::abs(pilot)), 100000, 40};
    double shell = integrate(f_prime, lo, hi, opts);
    if (prev_shell > 0.0) ratio = shell / prev_shell;
    prev_shell = shell;
  }
  rep.integrable_at_zero = ratio < 0.999;

  // kappa fit: theta(u) <= 1 + kappa/log u on (0, eps0] means
  // (theta(u)-1) log u >= kappa; report the infimum over the grid.
  double kappa = 1e300;
  double theta0 = 0.0;
  for (int j = 4; j <= max_level; ++j) {
    double u = std::pow(2.0, -static_cast<double>(j));
    kappa = std::min(kappa, (theta(u) - 1.0) * std::log(u));
    theta0 = std::max(theta0, theta(u));
  }
  rep.theta0_sup = theta0;
  if (kappa < 1e299) rep.kappa_bound = kappa;
  return rep;
}

}  // namespace ergo
