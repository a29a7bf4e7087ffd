#include "ergo/criteria.hpp"

#include "ergo/empirical.hpp"
#include "ergo/rng.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ergo {
namespace {

VectorXd box_point(const Box& box, Rng& rng) {
  VectorXd x(box.dim());
  for (int k = 0; k < box.dim(); ++k) {
    x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * rng.uniform01();
  }
  return x;
}

// Lattice walker over the box; emits grid_per_axis^d points.
template <typename F>
void for_each_grid_point(const Box& box, int grid_per_axis, F&& fn) {
  int d = box.dim();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  VectorXd x(d);
  while (true) {
    for (int k = 0; k < d; ++k) {
      double t = grid_per_axis == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(k)]) /
                                                (grid_per_axis - 1);
      x[k] = box.lo[k] + t * (box.hi[k] - box.lo[k]);
    }
    fn(x);
    int k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] == grid_per_axis) {
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == d) break;
  }
}

}  // namespace

NecessaryConditionReport necessary_condition(const Model& model, const MetricS& s,
                                             const std::vector<VectorXd>& nu_samples,
                                             const SphereOptOptions& opts) {
  if (nu_samples.empty()) throw parameter_error("necessary_condition: empty sample list");
  NecessaryConditionReport rep;
  rep.samples = static_cast<int>(nu_samples.size());
  KahanSum sum, sum2;
  for (const auto& x : nu_samples) {
    double v = diagonal_nils(model, s, x, opts).value;
    sum.add(v);
    sum2.add(v * v);
  }
  double n = static_cast<double>(nu_samples.size());
  rep.estimate = sum.value() / n;
  double var = std::max(0.0, sum2.value() / n - rep.estimate * rep.estimate);
  rep.std_error = std::sqrt(var / n);
  rep.negative_within_2se = rep.estimate <= 2.0 * rep.std_error;
  return rep;
}

SupReport smooth_criterion_sup(const Model& model, const MetricS& s, const Box& box,
                               int grid_per_axis, const SphereOptOptions& opts) {
  SupReport rep;
  rep.grid_per_axis = grid_per_axis;
  rep.sup_estimate = -std::numeric_limits<double>::infinity();
  for_each_grid_point(box, grid_per_axis, [&](const VectorXd& x) {
    DiagonalNils d = diagonal_nils_sup(model, s, x, opts);
    if (d.value > rep.sup_estimate) {
      rep.sup_estimate = d.value;
      rep.arg = x;
    }
  });
  rep.negative = rep.sup_estimate < 0.0;
  return rep;
}

CompactSetReport compact_set_criterion(const Model& model, const MetricS& s, double radius,
                                       double delta, int grid_per_axis, std::uint64_t seed) {
  CompactSetReport rep;
  int d = model.d;
  Rng rng(seed);
  rep.pair_worst = -std::numeric_limits<double>::infinity();
  int budget = grid_per_axis * grid_per_axis * 32;
  int accepted = 0;
  // Pairs x, y in the S-ball of radius R with 0 < |x-y|_S <= delta.
  while (accepted < budget) {
    VectorXd v(d);
    for (int k = 0; k < d; ++k) v[k] = rng.gaussian();
    VectorXd x = s.inv_sqrt_S() * (v * (radius * std::pow(rng.uniform01(), 1.0 / d) / v.norm()));
    VectorXd w(d);
    for (int k = 0; k < d; ++k) w[k] = rng.gaussian();
    double gap = delta * std::pow(rng.uniform01(), 1.0 / d);
    VectorXd y = x + s.inv_sqrt_S() * (w * (gap / w.norm()));
    if (s.norm(y) > radius) continue;
    VectorXd diff = x - y;
    if (s.norm2(diff) < 1e-28) continue;
    ++accepted;
    VectorXd bx(d), by(d);
    model.drift(x, bx);
    model.drift(y, by);
    MatrixXd sx(d, model.q), sy(d, model.q);
    model.diffusion(x, sx);
    model.diffusion(y, sy);
    sx -= sy;
    double val = (bx - by).dot(s.S() * diff) + 0.5 * (sx.transpose() * s.S() * sx).trace();
    rep.pair_worst = std::max(rep.pair_worst, val);
  }
  rep.samples = accepted;
  rep.pair_condition = rep.pair_worst < 0.0;

  // (AC)^diff: S J_b + J_b^T S + sqrt(S) sum (grad sigma_ij)^{x2} sqrt(S) < 0
  // by max eigenvalue over a grid in the ball's bounding box.
  Box box;
  double extent = radius / std::sqrt(s.S().eigenvalues().real().minCoeff());
  box.lo = VectorXd::Constant(d, -extent);
  box.hi = VectorXd::Constant(d, extent);
  rep.diff_worst = -std::numeric_limits<double>::infinity();
  for_each_grid_point(box, grid_per_axis, [&](const VectorXd& x) {
    if (s.norm(x) > radius) return;
    MatrixXd jb = model.jacobian_at(x);
    MatrixXd m = s.S() * jb;
    m += m.transpose().eval();
    auto grads = model.sigma_gradient_at(x);
    MatrixXd outer = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < model.q; ++j) {
        VectorXd gij(d);
        for (int k = 0; k < d; ++k) gij[k] = grads[static_cast<std::size_t>(k)](i, j);
        outer += gij * gij.transpose();
      }
    }
    m += s.sqrt_S() * outer * s.sqrt_S();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    rep.diff_worst = std::max(rep.diff_worst, es.eigenvalues().maxCoeff());
  });
  rep.differential_condition = rep.diff_worst < 0.0;
  return rep;
}

EllipticityReport directional_ellipticity(const Model& model, const MetricS& s, double eps0,
                                          int sample_budget, const Box& box, std::uint64_t seed) {
  EllipticityReport rep;
  Rng rng(seed);
  int d = model.d;
  double inf_eta = std::numeric_limits<double>::infinity();
  double inf_alpha = std::numeric_limits<double>::infinity();
  MatrixXd sx(d, model.q), sy(d, model.q);
  auto consider = [&](const VectorXd& x, const VectorXd& y) {
    VectorXd diff = x - y;
    if (s.norm(diff) < eps0) return;
    model.diffusion(x, sx);
    model.diffusion(y, sy);
    sx -= sy;
    double q = (sx.transpose() * (s.S() * diff)).norm();
    inf_eta = std::min(inf_eta, q);
    inf_alpha = std::min(inf_alpha, q / diff.squaredNorm());
    ++rep.samples;
  };
  for (int i = 0; i < sample_budget; ++i) consider(box_point(box, rng), box_point(box, rng));
  // Adversarial coordinate-aligned pairs: gaps along each axis.
  int per_axis = std::max(4, sample_budget / (8 * d));
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < per_axis; ++i) {
      VectorXd x = box_point(box, rng);
      VectorXd y = x;
      double lo = box.lo[k] - x[k], hi = box.hi[k] - x[k];
      double shift = lo + (hi - lo) * rng.uniform01();
      y[k] += shift;
      consider(x, y);
    }
  }
  rep.eta0 = std::isfinite(inf_eta) ? inf_eta : 0.0;
  rep.alpha0 = std::isfinite(inf_alpha) ? inf_alpha : 0.0;
  return rep;
}

EnvelopeReport verify_envelope(const Model& model, const MetricS& s, double alpha, double beta,
                               double a, int sample_budget, const Box& box, std::uint64_t seed) {
  if (!(alpha > 0.0) || !(a > 0.0)) throw parameter_error("verify_envelope: need alpha, a > 0");
  EnvelopeReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int i = 0; i < sample_budget; ++i) {
    VectorXd x = box_point(box, rng);
    VectorXd y = box_point(box, rng);
    VectorXd diff = x - y;
    double delta = diagonal_delta(s.norm(x), s.norm(y));
    if (s.norm(diff) < delta) continue;
    ++rep.samples;
    double lhs = nils(model, s, x, y);
    double margin = lhs - beta + 0.5 * alpha * (std::pow(x.norm(), a) + std::pow(y.norm(), a));
    if (margin > rep.max_violation) {
      rep.max_violation = margin;
      rep.x = x;
      rep.y = y;
    }
  }
  rep.violated = rep.max_violation > 0.0;
  return rep;
}

std::vector<PathwisePairReport> pathwise_confluence_probe(
    const Model& model, const std::vector<std::pair<VectorXd, VectorXd>>& pairs,
    const CorrelationSpec& rho, double dt, double horizon,
    const std::function<double(double)>& scale_map, std::uint64_t seed) {
  std::vector<PathwisePairReport> out;
  std::uint64_t stream = 0;
  for (const auto& [x1, x2] : pairs) {
    PathwisePairReport rep;
    rep.x1 = x1;
    rep.x2 = x2;
    NoiseStream noise(model.q, seed, stream++);
    double tail_start = 0.8 * horizon;
    KahanSum gap_sum, p_gap_sum;
    long tail_count = 0;
    try {
      simulate_duplicated_continuous(
          model, x1, x2, rho, dt, horizon,
          [&](double t, const VectorXd& a, const VectorXd& b) {
            double gap = (a - b).norm();
            double p_gap = scale_map ? std::abs(scale_map(a[0]) - scale_map(b[0])) : 0.0;
            if (t >= tail_start) {
              gap_sum.add(gap);
              p_gap_sum.add(p_gap);
              ++tail_count;
            }
            rep.terminal_gap = gap;
            rep.terminal_p_gap = p_gap;
          },
          noise);
    } catch (const divergence_error&) {
      rep.diverged = true;
    }
    if (tail_count > 0) {
      rep.time_avg_gap = gap_sum.value() / static_cast<double>(tail_count);
      rep.time_avg_p_gap = p_gap_sum.value() / static_cast<double>(tail_count);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<std::pair<VectorXd, double>> generator_on_grid(
    const Model& model, const std::function<double(const VectorXd&)>& v, const Box& box,
    int grid_per_axis) {
  std::vector<std::pair<VectorXd, double>> out;
  int d = model.d;
  for_each_grid_point(box, grid_per_axis, [&](const VectorXd& x) {
    VectorXd grad(d);
    MatrixXd hess(d, d);
    for (int i = 0; i < d; ++i) {
      double hi = fd_step(x[i]);
      VectorXd xp = x, xm = x;
      xp[i] += hi;
      xm[i] -= hi;
      grad[i] = (v(xp) - v(xm)) / (2.0 * hi);
      hess(i, i) = (v(xp) - 2.0 * v(x) + v(xm)) / (hi * hi);
      for (int j = i + 1; j < d; ++j) {
        double hj = fd_step(x[j]);
        VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += hi; xpp[j] += hj;
        xpm[i] += hi; xpm[j] -= hj;
        xmp[i] -= hi; xmp[j] += hj;
        xmm[i] -= hi; xmm[j] -= hj;
        hess(i, j) = hess(j, i) = (v(xpp) - v(xpm) - v(xmp) + v(xmm)) / (4.0 * hi * hj);
      }
    }
    VectorXd b(d);
    model.drift(x, b);
    MatrixXd sig(d, model.q);
    model.diffusion(x, sig);
    double av = b.dot(grad) + 0.5 * (sig * sig.transpose() * hess).trace();
    out.emplace_back(x, av);
  });
  return out;
}

DriftMonotonicityReport drift_monotonicity_sup(const Model& model, const MetricS& s, const Box& box,
                                               int sample_budget, std::uint64_t seed) {
  DriftMonotonicityReport rep;
  Rng rng(seed);
  rep.sup_estimate = -std::numeric_limits<double>::infinity();
  double sup_inner = -std::numeric_limits<double>::infinity();
  double sup_outer = -std::numeric_limits<double>::infinity();
  VectorXd bx(model.d), by(model.d);
  for (int i = 0; i < sample_budget; ++i) {
    VectorXd x = box_point(box, rng);
    VectorXd y = box_point(box, rng);
    VectorXd diff = x - y;
    double n2 = s.norm2(diff);
    if (n2 < 1e-20) continue;
    ++rep.samples;
    model.drift(x, bx);
    model.drift(y, by);
    double val = (bx - by).dot(s.S() * diff) / n2;
    rep.sup_estimate = std::max(rep.sup_estimate, val);
    double scale = std::max(s.norm(x), s.norm(y));
    double mid = 0.5 * s.norm(box.hi);
    if (scale > mid) {
      sup_outer = std::max(sup_outer, val);
    } else {
      sup_inner = std::max(sup_inner, val);
    }
  }
  rep.possibly_unbounded = sup_outer > sup_inner + 1.0;
  return rep;
}

}  // namespace ergo
