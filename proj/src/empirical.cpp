#include "ergo/empirical.hpp"

#include <cmath>

namespace ergo {

void Histogram::add(double value, double w) {
  if (value < lo || value >= hi || !std::isfinite(value)) {
    out_of_range += w;
    return;
  }
  auto bin = static_cast<std::size_t>((value - lo) / (hi - lo) * weights.size());
  if (bin >= weights.size()) bin = weights.size() - 1;
  weights[bin] += w;
}

void Histogram::merge(const Histogram& o) {
  if (o.weights.size() != weights.size() || o.lo != lo || o.hi != hi) {
    throw parameter_error("Histogram::merge: incompatible layouts");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += o.weights[i];
  out_of_range += o.out_of_range;
}

double Histogram::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

WeightedEmpiricalMeasure::WeightedEmpiricalMeasure(int dim) : dim_(dim), moments_(dim) {}

int WeightedEmpiricalMeasure::register_function(std::string name,
                                                std::function<double(const VectorXd&)> fn) {
  if (count_ > 0) throw parameter_error("register_function: measure already has updates");
  names_.push_back(std::move(name));
  fns_.push_back(std::move(fn));
  sums_.emplace_back();
  return static_cast<int>(fns_.size()) - 1;
}

void WeightedEmpiricalMeasure::enable_histogram(int coord, double lo, double hi, int bins) {
  if (count_ > 0) throw parameter_error("enable_histogram: measure already has updates");
  if (!(lo < hi) || bins <= 0) throw parameter_error("enable_histogram: bad layout");
  has_hist_ = true;
  hist_.coord = coord;
  hist_.lo = lo;
  hist_.hi = hi;
  hist_.weights.assign(static_cast<std::size_t>(bins), 0.0);
}

void WeightedEmpiricalMeasure::update(double weight, const VectorXd& point) {
  if (!(weight > 0.0)) throw parameter_error("update: weight must be > 0");
  ++count_;
  h_.add(weight);
  for (std::size_t i = 0; i < fns_.size(); ++i) sums_[i].add(weight * fns_[i](point));
  for (int c = 0; c < dim_; ++c) {
    double p = point[c];
    double acc = weight;
    for (int k = 0; k < 4; ++k) {
      acc *= p;
      moments_[c][k].add(acc);
    }
  }
  if (has_hist_) hist_.add(point[hist_.coord], weight);
}

double WeightedEmpiricalMeasure::integrate(int idx) const {
  if (count_ == 0) throw parameter_error("integrate: empty measure");
  return sums_[idx].value() / h_.value();
}

double WeightedEmpiricalMeasure::moment(int coord, int order) const {
  if (count_ == 0) throw parameter_error("moment: empty measure");
  if (order < 1 || order > 4) throw parameter_error("moment: order must be 1..4");
  return moments_[coord][order - 1].value() / h_.value();
}

void WeightedEmpiricalMeasure::merge(const WeightedEmpiricalMeasure& o) {
  if (o.dim_ != dim_ || o.fns_.size() != fns_.size()) {
    throw parameter_error("merge: incompatible measures");
  }
  count_ += o.count_;
  h_.merge(o.h_);
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i].merge(o.sums_[i]);
  for (int c = 0; c < dim_; ++c) {
    for (int k = 0; k < 4; ++k) moments_[c][k].merge(o.moments_[c][k]);
  }
  if (has_hist_ != o.has_hist_) throw parameter_error("merge: histogram mismatch");
  if (has_hist_) hist_.merge(o.hist_);
}

CouplingMeasure::CouplingMeasure(int dim, MatrixXd s_metric)
    : dim_(dim), s_(std::move(s_metric)), probe_(kProbeBins) {
  has_s_ = s_.size() > 0;
}

double CouplingMeasure::s_dist(const VectorXd& x, const VectorXd& y) const {
  VectorXd diff = x - y;
  if (!has_s_) return diff.norm();
  return std::sqrt(diff.dot(s_ * diff));
}

int CouplingMeasure::register_function(std::string name,
                                       std::function<double(const VectorXd&, const VectorXd&)> fn) {
  if (count_ > 0) throw parameter_error("register_function: measure already has updates");
  names_.push_back(std::move(name));
  fns_.push_back(std::move(fn));
  sums_.emplace_back();
  return static_cast<int>(fns_.size()) - 1;
}

int CouplingMeasure::register_offdiag_function(
    std::string name, std::function<double(const VectorXd&, const VectorXd&)> fn) {
  if (count_ > 0) throw parameter_error("register_offdiag_function: measure already has updates");
  od_names_.push_back(std::move(name));
  od_fns_.push_back(std::move(fn));
  od_sums_.emplace_back();
  od_weights_.emplace_back();
  return static_cast<int>(od_fns_.size()) - 1;
}

void CouplingMeasure::update(double weight, const VectorXd& x, const VectorXd& y) {
  if (!(weight > 0.0)) throw parameter_error("update: weight must be > 0");
  ++count_;
  h_.add(weight);
  for (std::size_t i = 0; i < fns_.size(); ++i) sums_[i].add(weight * fns_[i](x, y));

  double dist = s_dist(x, y);
  double xs = has_s_ ? std::sqrt(x.dot(s_ * x)) : x.norm();
  double ys = has_s_ ? std::sqrt(y.dot(s_ * y)) : y.norm();
  double delta = diagonal_delta(xs, ys);
  if (dist >= delta) {
    for (std::size_t i = 0; i < od_fns_.size(); ++i) {
      od_sums_[i].add(weight * od_fns_[i](x, y));
      od_weights_[i].add(weight);
    }
  }

  // log10-distance probe histogram over [-16, 4).
  int bin;
  if (dist <= 0.0) {
    bin = 0;
  } else {
    double l = std::log10(dist);
    bin = static_cast<int>((l + 16.0) / 20.0 * kProbeBins);
    bin = std::max(0, std::min(kProbeBins - 1, bin));
  }
  probe_[static_cast<std::size_t>(bin)].add(weight);
}

double CouplingMeasure::integrate(int idx) const {
  if (count_ == 0) throw parameter_error("integrate: empty measure");
  return sums_[idx].value() / h_.value();
}

double CouplingMeasure::offdiag_weight(int idx) const { return od_weights_[idx].value(); }

double CouplingMeasure::integrate_offdiag(int idx) const {
  double w = od_weights_[idx].value();
  if (!(w > 0.0)) throw parameter_error("integrate_offdiag: no off-diagonal mass");
  return od_sums_[idx].value() / w;
}

double CouplingMeasure::diagonal_fraction(double delta) const {
  if (count_ == 0) return 0.0;
  double edge = delta <= 0.0 ? -16.0 : std::log10(delta);
  double mass = 0.0;
  for (int b = 0; b < kProbeBins; ++b) {
    double upper = -16.0 + 20.0 * (b + 1) / kProbeBins;
    if (upper <= edge) mass += probe_[static_cast<std::size_t>(b)].value();
  }
  return mass / h_.value();
}

void CouplingMeasure::merge(const CouplingMeasure& o) {
  if (o.dim_ != dim_ || o.fns_.size() != fns_.size() || o.od_fns_.size() != od_fns_.size()) {
    throw parameter_error("merge: incompatible coupling measures");
  }
  count_ += o.count_;
  h_.merge(o.h_);
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i].merge(o.sums_[i]);
  for (std::size_t i = 0; i < od_sums_.size(); ++i) {
    od_sums_[i].merge(o.od_sums_[i]);
    od_weights_[i].merge(o.od_weights_[i]);
  }
  for (int b = 0; b < kProbeBins; ++b) {
    probe_[static_cast<std::size_t>(b)].merge(o.probe_[static_cast<std::size_t>(b)]);
  }
}

double rr_combine(const WeightedEmpiricalMeasure& nu_half, const WeightedEmpiricalMeasure& nu_full,
                  int idx_half, int idx_full) {
  if (nu_half.count() != 2 * nu_full.count()) {
    throw parameter_error("rr_combine: measures cover different schedule prefixes");
  }
  return 2.0 * nu_half.integrate(idx_half) - nu_full.integrate(idx_full);
}

double integrated_nils(const CouplingMeasure& coupling, int offdiag_idx) {
  if (!(coupling.offdiag_weight(offdiag_idx) > 0.0)) {
    throw parameter_error("integrated_nils: degenerate coupling, all mass on the diagonal band");
  }
  return coupling.integrate_offdiag(offdiag_idx);
}

}  // namespace ergo
