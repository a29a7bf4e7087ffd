#include "ergo/oned.hpp"

#include "ergo/quadrature.hpp"

#include <cmath>

namespace ergo {
namespace {

// Evaluate by nearest tabulated node plus an exact local quadrature hop.
double node_plus_local(const std::vector<double>& xs, const std::vector<double>& vals, double x,
                       const std::function<double(double)>& integrand) {
  double dx = xs[1] - xs[0];
  auto i = static_cast<std::size_t>(std::llround((x - xs.front()) / dx));
  i = std::min(i, xs.size() - 1);
  double local = 0.0;
  if (x != xs[i]) local = integrate(integrand, xs[i], x, {1e-11, 20000, 40});
  return vals[i] + local;
}

}  // namespace

double OneDimTheory::phi(double x) const {
  auto integrand = [this](double u) {
    double s = sig_(u);
    return 2.0 * b_(u) / (s * s);
  };
  return node_plus_local(grid_x_, phi_grid_, x, integrand);
}

double OneDimTheory::p_prime(double x) const { return std::exp(-phi(x)); }

double OneDimTheory::p(double x) const {
  auto integrand = [this](double u) { return p_prime(u); };
  return node_plus_local(grid_x_, p_grid_, x, integrand);
}

double OneDimTheory::speed_density(double x) const {
  double s = sig_(x);
  return 1.0 / (s * s * p_prime(x));
}

OneDimTheory scale_speed_1d(const Model& model_1d, double x0, double lo, double hi,
                            int grid_points) {
  if (model_1d.d != 1 || model_1d.q != 1) {
    throw parameter_error("scale_speed_1d: model must have d = q = 1");
  }
  if (!(lo < x0 && x0 < hi)) throw parameter_error("scale_speed_1d: need lo < x0 < hi");
  if (grid_points < 3) throw parameter_error("scale_speed_1d: grid too small");

  OneDimTheory t;
  t.x0_ = x0;
  t.lo_ = lo;
  t.hi_ = hi;
  t.b_ = [drift = model_1d.drift](double x) {
    VectorXd v(1), out(1);
    v[0] = x;
    drift(v, out);
    return out[0];
  };
  t.sig_ = [diffusion = model_1d.diffusion](double x) {
    VectorXd v(1);
    MatrixXd out(1, 1);
    v[0] = x;
    diffusion(v, out);
    return out(0, 0);
  };

  auto n = static_cast<std::size_t>(grid_points);
  t.grid_x_.resize(n);
  t.phi_grid_.resize(n);
  t.p_grid_.resize(n);
  double dx = (hi - lo) / (grid_points - 1);
  for (std::size_t i = 0; i < n; ++i) t.grid_x_[i] = lo + i * dx;

  auto drift_over_var = [&t](double u) {
    double s = t.sig_(u);
    return 2.0 * t.b_(u) / (s * s);
  };

  // phi on the grid: cumulative from x0 outward so the anchor phi(x0) = 0 is
  // exact at the nearest node.
  auto i0 = static_cast<std::size_t>(std::llround((x0 - lo) / dx));
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = i0 + 1; i < n; ++i) {
    double piece;
    try {
      piece = integrate(drift_over_var, t.grid_x_[i - 1], t.grid_x_[i], {1e-11, 50000, 40});
    } catch (const quadrature_error&) {
      throw quadrature_error("scale_speed_1d: 2b/sigma^2 not integrable near x = " +
                             std::to_string(0.5 * (t.grid_x_[i - 1] + t.grid_x_[i])));
    }
    cum[i] = cum[i - 1] + piece;
  }
  for (std::size_t i = i0; i-- > 0;) {
    double piece;
    try {
      piece = integrate(drift_over_var, t.grid_x_[i], t.grid_x_[i + 1], {1e-11, 50000, 40});
    } catch (const quadrature_error&) {
      throw quadrature_error("scale_speed_1d: 2b/sigma^2 not integrable near x = " +
                             std::to_string(0.5 * (t.grid_x_[i] + t.grid_x_[i + 1])));
    }
    cum[i] = cum[i + 1] - piece;
  }
  double shift = integrate(drift_over_var, t.grid_x_[i0], x0, {1e-12, 20000, 40});
  for (std::size_t i = 0; i < n; ++i) t.phi_grid_[i] = cum[i] + 0.0 - (cum[i0] + shift);

  // p on the grid from p' = exp(-phi), anchored at x0 the same way.
  auto p_prime_fn = [&t](double u) { return std::exp(-t.phi(u)); };
  std::vector<double> cump(n, 0.0);
  for (std::size_t i = i0 + 1; i < n; ++i) {
    cump[i] = cump[i - 1] +
              integrate(p_prime_fn, t.grid_x_[i - 1], t.grid_x_[i], {1e-11, 50000, 40});
  }
  for (std::size_t i = i0; i-- > 0;) {
    cump[i] = cump[i + 1] - integrate(p_prime_fn, t.grid_x_[i], t.grid_x_[i + 1], {1e-11, 50000, 40});
  }
  double shift_p = integrate(p_prime_fn, t.grid_x_[i0], x0, {1e-12, 20000, 40});
  for (std::size_t i = 0; i < n; ++i) t.p_grid_[i] = cump[i] - (cump[i0] + shift_p);

  // Speed mass over [lo, hi].
  auto speed = [&t](double u) { return t.speed_density(u); };
  t.speed_mass_ = integrate(speed, lo, hi, {1e-9, 1000000, 44});
  double wing = 0.1 * (hi - lo);
  double tail = (t.speed_density(lo) + t.speed_density(hi)) * wing;
  t.mass_tail_negligible_ = tail < 1e-6 * t.speed_mass_;

  // Divergence-of-p evidence: p' not decaying toward the range ends means
  // the scale keeps accumulating (p(+-inf) = +-inf behaviour on this grid).
  double ref = 1.0 + std::exp(-t.phi_grid_[i0]);
  t.p_grow_pos_ = std::exp(-t.phi_grid_.back()) > 1e-8 * ref;
  t.p_grow_neg_ = std::exp(-t.phi_grid_.front()) > 1e-8 * ref;
  return t;
}

}  // namespace ergo
