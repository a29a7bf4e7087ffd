#include "ergo/nils.hpp"

#include "ergo/empirical.hpp"
#include "ergo/rng.hpp"

#include <cmath>

namespace ergo {
namespace {

struct PairTerms {
  double drift_inner;   // (b(x)-b(y) | x-y)_S
  double sigma_frob2;   // ||sigma(x)-sigma(y)||_S^2
  double directional2;  // |(sigma^T(x)-sigma^T(y)) S (x-y)|^2
  double dist2;         // |x-y|_S^2
};

PairTerms pair_terms(const Model& model, const MetricS& s, const VectorXd& x, const VectorXd& y) {
  PairTerms t{};
  VectorXd diff = x - y;
  VectorXd sdiff = s.S() * diff;
  t.dist2 = diff.dot(sdiff);
  VectorXd bx(model.d), by(model.d);
  model.drift(x, bx);
  model.drift(y, by);
  t.drift_inner = (bx - by).dot(sdiff);
  MatrixXd sx(model.d, model.q), sy(model.d, model.q);
  model.diffusion(x, sx);
  model.diffusion(y, sy);
  sx -= sy;
  t.sigma_frob2 = (sx.transpose() * s.S() * sx).trace();
  t.directional2 = (sx.transpose() * sdiff).squaredNorm();
  return t;
}

void check_off_diagonal(const MetricS& s, const VectorXd& x, const VectorXd& y, double dist2) {
  double delta = diagonal_delta(s.norm(x), s.norm(y));
  if (!(dist2 >= delta * delta)) {
    throw std::domain_error("nils: pair inside the diagonal band |x-y|_S < delta");
  }
}

}  // namespace

double nils(const Model& model, const MetricS& s, const VectorXd& x, const VectorXd& y) {
  PairTerms t = pair_terms(model, s, x, y);
  check_off_diagonal(s, x, y, t.dist2);
  return t.drift_inner / t.dist2 + 0.5 * t.sigma_frob2 / t.dist2 -
         t.directional2 / (t.dist2 * t.dist2);
}

double psi(const Model& model, const MetricS& s, const ThetaFunction& theta, const VectorXd& x,
           const VectorXd& y) {
  PairTerms t = pair_terms(model, s, x, y);
  check_off_diagonal(s, x, y, t.dist2);
  return t.drift_inner + 0.5 * t.sigma_frob2 - theta(t.dist2) * t.directional2 / t.dist2;
}

double diagonal_form(const Model& model, const MetricS& s, const VectorXd& x, const VectorXd& u) {
  MatrixXd jb = model.jacobian_at(x);
  MatrixXd sym = s.S() * jb;
  sym += sym.transpose().eval();
  double drift_term = u.dot(sym * u);
  MatrixXd du_sigma = model.sigma_directional(x, u);
  double frob = (du_sigma.transpose() * s.S() * du_sigma).trace();
  double dir = (du_sigma.transpose() * (s.S() * u)).squaredNorm();
  return drift_term + frob - 2.0 * dir;
}

namespace {

// Deterministic S-sphere sampling: u = S^{-1/2} v with |v| = 1. d=2 uses a
// uniform angle grid, d=3 a Fibonacci sphere, d>3 seeded random directions.
std::vector<VectorXd> unit_sphere_points(int d, int n, std::uint64_t seed) {
  std::vector<VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(n));
  if (d == 1) {
    VectorXd v(1);
    v[0] = 1.0;
    pts.push_back(v);
    v[0] = -1.0;
    pts.push_back(v);
    return pts;
  }
  if (d == 2) {
    for (int i = 0; i < n; ++i) {
      double a = M_PI * i / n;  // form is even in u: half circle suffices
      VectorXd v(2);
      v << std::cos(a), std::sin(a);
      pts.push_back(v);
    }
    return pts;
  }
  if (d == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / n;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double a = golden * i;
      VectorXd v(3);
      v << r * std::cos(a), r * std::sin(a), z;
      pts.push_back(v);
    }
    return pts;
  }
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    VectorXd v(d);
    for (int k = 0; k < d; ++k) v[k] = rng.gaussian();
    v.normalize();
    pts.push_back(v);
  }
  return pts;
}

DiagonalNils optimize_direction(const Model& model, const MetricS& s, const VectorXd& x,
                                const SphereOptOptions& opts, bool maximize) {
  const int d = model.d;
  auto objective = [&](const VectorXd& v) {
    VectorXd u = s.inv_sqrt_S() * v;  // |u|_S = |v|
    double f = diagonal_form(model, s, x, u);
    return maximize ? -f : f;
  };
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_v;
  for (const auto& v : unit_sphere_points(d, opts.samples, opts.seed)) {
    double f = objective(v);
    if (f < best) {
      best = f;
      best_v = v;
    }
  }
  // Projected-gradient polish on the Euclidean sphere in v coordinates.
  VectorXd v = best_v;
  double step = 0.1;
  double fv = best;
  for (int it = 0; it < opts.refine_steps; ++it) {
    VectorXd grad(d);
    double h = 1e-6;
    for (int k = 0; k < d; ++k) {
      VectorXd vp = v, vm = v;
      vp[k] += h;
      vm[k] -= h;
      vp.normalize();
      vm.normalize();
      grad[k] = (objective(vp) - objective(vm)) / (2.0 * h);
    }
    VectorXd tangent = grad - grad.dot(v) * v;
    VectorXd cand = (v - step * tangent).normalized();
    double fc = objective(cand);
    if (fc < fv) {
      v = cand;
      fv = fc;
      step *= 1.3;
    } else {
      step *= 0.5;
    }
  }
  DiagonalNils out;
  out.value = 0.5 * (maximize ? -fv : fv);
  out.direction = s.inv_sqrt_S() * v;
  return out;
}

}  // namespace

DiagonalNils diagonal_nils(const Model& model, const MetricS& s, const VectorXd& x,
                           const SphereOptOptions& opts) {
  return optimize_direction(model, s, x, opts, /*maximize=*/false);
}

DiagonalNils diagonal_nils_sup(const Model& model, const MetricS& s, const VectorXd& x,
                               const SphereOptOptions& opts) {
  return optimize_direction(model, s, x, opts, /*maximize=*/true);
}

}  // namespace ergo
