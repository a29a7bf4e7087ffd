#pragma once

#include "ergo/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ergo {

// Weighted histogram over one coordinate; out-of-range mass tracked apart.
struct Histogram {
  int coord = 0;
  double lo = 0.0, hi = 0.0;
  std::vector<double> weights;
  double out_of_range = 0.0;

  void add(double value, double w);
  void merge(const Histogram& o);
  double total_weight() const;
};

// Online nu_n^eta: running H_n = sum eta_k and weighted sums of registered
// test functions, plus per-coordinate moment accumulators up to order 4.
class WeightedEmpiricalMeasure {
 public:
  explicit WeightedEmpiricalMeasure(int dim);

  int register_function(std::string name, std::function<double(const VectorXd&)> fn);
  void enable_histogram(int coord, double lo, double hi, int bins);

  void update(double weight, const VectorXd& point);

  double total_weight() const { return h_.value(); }
  long count() const { return count_; }

  // Weighted mean of registered function i; integrate of the constant 1 is
  // exactly 1 by normalization.
  double integrate(int idx) const;
  double integrate_one() const { return count_ == 0 ? 0.0 : 1.0; }
  double moment(int coord, int order) const;  // order 1..4

  // Combines accumulators built over disjoint index ranges; equals
  // single-pass accumulation up to summation order.
  void merge(const WeightedEmpiricalMeasure& o);

  const Histogram* histogram() const { return has_hist_ ? &hist_ : nullptr; }
  const std::string& function_name(int idx) const { return names_[idx]; }
  int function_count() const { return static_cast<int>(fns_.size()); }
  int dim() const { return dim_; }

 private:
  int dim_;
  long count_ = 0;
  KahanSum h_;
  std::vector<std::string> names_;
  std::vector<std::function<double(const VectorXd&)>> fns_;
  std::vector<KahanSum> sums_;
  std::vector<std::array<KahanSum, 4>> moments_;
  bool has_hist_ = false;
  Histogram hist_;
};

// Empirical measure over pairs (x, y). Bivariate test functions come in two
// flavors: plain, and off-diagonal-only for integrands undefined on the
// diagonal (NILS); near-diagonal mass is then tracked separately.
class CouplingMeasure {
 public:
  CouplingMeasure(int dim, MatrixXd s_metric = MatrixXd());

  int register_function(std::string name, std::function<double(const VectorXd&, const VectorXd&)> fn);
  int register_offdiag_function(std::string name,
                                std::function<double(const VectorXd&, const VectorXd&)> fn);

  void update(double weight, const VectorXd& x, const VectorXd& y);

  double total_weight() const { return h_.value(); }
  long count() const { return count_; }
  double integrate(int idx) const;            // plain functions
  double offdiag_weight(int idx) const;       // mass seen by off-diagonal fn
  double integrate_offdiag(int idx) const;    // mean over off-diagonal mass

  // Weighted fraction of mass with |x-y|_S < delta (diagonal probe).
  double diagonal_fraction(double delta) const;

  void merge(const CouplingMeasure& o);

  int dim() const { return dim_; }

 private:
  double s_dist(const VectorXd& x, const VectorXd& y) const;

  int dim_;
  MatrixXd s_;
  bool has_s_ = false;
  long count_ = 0;
  KahanSum h_;
  std::vector<std::string> names_;
  std::vector<std::function<double(const VectorXd&, const VectorXd&)>> fns_;
  std::vector<KahanSum> sums_;
  std::vector<std::string> od_names_;
  std::vector<std::function<double(const VectorXd&, const VectorXd&)>> od_fns_;
  std::vector<KahanSum> od_sums_;
  std::vector<KahanSum> od_weights_;
  // diagonal probe histogram over log10 |x-y|_S distances
  std::vector<KahanSum> probe_;
  static constexpr int kProbeBins = 64;
};

// Relative near-diagonal exclusion width: Lambda_S has a 0/0 form on the
// diagonal, so the threshold scales with the points.
inline double diagonal_delta(double xs_norm, double ys_norm) {
  return 1e-8 * (1.0 + xs_norm + ys_norm);
}

// Richardson-Romberg combination 2 nu_half(f) - nu_full(f); both measures
// must cover the same schedule prefix.
double rr_combine(const WeightedEmpiricalMeasure& nu_half, const WeightedEmpiricalMeasure& nu_full,
                  int idx_half, int idx_full);

// Integral of a registered off-diagonal function (e.g. the NILS exponent)
// against the coupling, excluding the near-diagonal band. Throws when all
// mass is within the band.
double integrated_nils(const CouplingMeasure& coupling, int offdiag_idx);

}  // namespace ergo
