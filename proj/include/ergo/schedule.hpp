#pragma once

#include "ergo/common.hpp"

namespace ergo {

// Polynomial step sequence gamma_n = C n^{-mu}, n >= 1 (gamma_1 = C).
// The descriptor is immutable; running sums live in ScheduleAccumulator so
// one schedule can be shared across workers.
class StepSchedule {
 public:
  StepSchedule(double C, double mu);

  double C() const { return c_; }
  double mu() const { return mu_; }
  double gamma(long n) const { return c_ * std::pow(static_cast<double>(n), -mu_); }

 private:
  double c_;
  double mu_;
};

// Gamma_n and Gamma_n^{(r)} for r in {2,3} plus one configurable extra power.
class ScheduleAccumulator {
 public:
  explicit ScheduleAccumulator(const StepSchedule& sched, int extra_r = 4)
      : sched_(&sched), extra_r_(extra_r) {}

  // Advances to index n+1 and returns gamma_{n+1}.
  double next() {
    double g = sched_->gamma(++n_);
    gamma_n_ = g;
    sum1_.add(g);
    sum2_.add(g * g);
    sum3_.add(g * g * g);
    sum_extra_.add(std::pow(g, extra_r_));
    return g;
  }

  long n() const { return n_; }
  double gamma_n() const { return gamma_n_; }
  double Gamma() const { return sum1_.value(); }
  double Gamma_r(int r) const;

 private:
  const StepSchedule* sched_;
  int extra_r_;
  long n_ = 0;
  double gamma_n_ = 0.0;
  KahanSum sum1_, sum2_, sum3_, sum_extra_;
};

// Symmetric PSD square root by symmetric eigendecomposition (handles
// rho^T rho = I without the pivot breakdown a Cholesky route would hit).
// Eigenvalues in [-1e-10, 0) are clamped to 0; below that it is an error.
MatrixXd matrix_sqrt_psd(const MatrixXd& a);

// Correlation rho between the two driving noises together with
// T = sqrt_psd(I - rho^T rho), the mixing matrix of the second stream.
struct CorrelationSpec {
  MatrixXd rho;
  MatrixXd T;
  bool identity = false;  // rho == I exactly: shared-noise fast path

  int q() const { return static_cast<int>(rho.rows()); }
};

CorrelationSpec make_correlation(const MatrixXd& rho);
CorrelationSpec make_correlation_scalar(double rho, int q);

}  // namespace ergo
