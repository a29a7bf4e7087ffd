#pragma once

#include "ergo/engine.hpp"
#include "ergo/metric.hpp"
#include "ergo/nils.hpp"

#include <optional>
#include <vector>

namespace ergo {

// All criterion outputs are sampled evidence: suprema/infima over grids and
// random batches, never proofs. Grid parameters ride along in the reports.

struct NecessaryConditionReport {
  double estimate = 0.0;
  double std_error = 0.0;
  int samples = 0;
  bool negative_within_2se = false;  // estimate <= 2 * std_error
};

// Monte Carlo estimate of int Lambda_S(x,x) nu(dx) over equilibrated samples
// via the diagonal (lsc) extension.
NecessaryConditionReport necessary_condition(const Model& model, const MetricS& s,
                                             const std::vector<VectorXd>& nu_samples,
                                             const SphereOptOptions& opts = {});

struct SupReport {
  double sup_estimate = 0.0;  // 1/2 sup_x sup_u of the diagonal form
  VectorXd arg;
  bool negative = false;
  int grid_per_axis = 0;
};

// Smooth-coefficient criterion: sup over the box of the sup-direction form;
// negative is evidence for Lambda_S <= -c0 off-diagonal.
SupReport smooth_criterion_sup(const Model& model, const MetricS& s, const Box& box,
                               int grid_per_axis, const SphereOptOptions& opts = {});

struct CompactSetReport {
  bool pair_condition = false;  // (b(x)-b(y)|x-y)_S + 1/2||sigma(x)-sigma(y)||_S^2 < 0 sampled
  double pair_worst = 0.0;
  bool differential_condition = false;  // (AC)^diff: max eigenvalue < 0 over grid
  double diff_worst = 0.0;
  int samples = 0;
};

// Near-diagonal criterion inside the S-ball of radius R with gap <= delta.
CompactSetReport compact_set_criterion(const Model& model, const MetricS& s, double radius,
                                       double delta, int grid_per_axis, std::uint64_t seed = 3);

struct EllipticityReport {
  double eta0 = 0.0;    // inf |(sigma^T(x)-sigma^T(y)) S (x-y)| over |x-y|_S >= eps0
  double alpha0 = 0.0;  // inf of the same quantity / |x-y|^2
  int samples = 0;
  bool grid_limited = true;  // the reported inf is an upper bound of the true inf
};

EllipticityReport directional_ellipticity(const Model& model, const MetricS& s, double eps0,
                                          int sample_budget, const Box& box,
                                          std::uint64_t seed = 5);

struct EnvelopeReport {
  double max_violation = 0.0;  // max of Lambda_S(x,y) - beta + alpha/2 (|x|^a + |y|^a)
  VectorXd x, y;
  bool violated = false;
  int samples = 0;
};

// Checks Lambda_S(x,y) <= beta - alpha/2 (|x|^a + |y|^a) on sampled pairs.
EnvelopeReport verify_envelope(const Model& model, const MetricS& s, double alpha, double beta,
                               double a, int sample_budget, const Box& box, std::uint64_t seed = 7);

struct PathwisePairReport {
  VectorXd x1, x2;
  double terminal_gap = 0.0;
  double time_avg_gap = 0.0;    // over the final 20% of the horizon
  double terminal_p_gap = 0.0;  // |p(X1)-p(X2)| when a scale map is given
  double time_avg_p_gap = 0.0;
  bool diverged = false;
};

// Shared-noise (or rho-correlated) pair simulation; gap statistics over the
// tail of the horizon.
std::vector<PathwisePairReport> pathwise_confluence_probe(
    const Model& model, const std::vector<std::pair<VectorXd, VectorXd>>& pairs,
    const CorrelationSpec& rho, double dt, double horizon,
    const std::function<double(double)>& scale_map, std::uint64_t seed);

// Generator A V(x) = (b | grad V) + 1/2 Tr(sigma sigma^T D^2 V) on a grid,
// for eyeballing mean reversion of a user-supplied Lyapunov candidate.
std::vector<std::pair<VectorXd, double>> generator_on_grid(
    const Model& model, const std::function<double(const VectorXd&)>& v, const Box& box,
    int grid_per_axis);

// Estimate of [b]_{S,+} = sup (b(x)-b(y)|x-y)_S / |x-y|_S^2 on a box; the
// heuristic unbounded flag fires when the estimate keeps growing toward the
// box corners.
struct DriftMonotonicityReport {
  double sup_estimate = 0.0;
  bool possibly_unbounded = false;
  int samples = 0;
};
DriftMonotonicityReport drift_monotonicity_sup(const Model& model, const MetricS& s, const Box& box,
                                               int sample_budget, std::uint64_t seed = 11);

}  // namespace ergo
