#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ergo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Parameter/precondition violations (bad sigma, inadmissible rho, ...).
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A trajectory left the finite domain; carries the offending step index.
class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& what, long step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Quadrature failed to reach the requested tolerance.
class quadrature_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coordinate magnitude beyond this aborts a replication.
inline constexpr double kDivergenceThreshold = 1e12;

inline bool is_divergent(const VectorXd& x) {
  for (int i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceThreshold) return true;
  }
  return false;
}

// Central-difference step: eps^{1/3} * max(1,|x|) per coordinate.
inline double fd_step(double xk) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::abs(xk));
}

// Axis-aligned box in R^d.
struct Box {
  VectorXd lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  static Box cube(int d, double a, double b) {
    Box box;
    box.lo = VectorXd::Constant(d, a);
    box.hi = VectorXd::Constant(d, b);
    return box;
  }
};

// Compensated summation; long weighted sums of near-canceling terms would
// otherwise lose the CLT-scale signal.
class KahanSum {
 public:
  void add(double v) {
    double y = v - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  void merge(const KahanSum& o) {
    add(o.s_);
    add(-o.c_);
  }
  double value() const { return s_ - c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace ergo
