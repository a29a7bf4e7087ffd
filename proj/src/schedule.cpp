#include "ergo/schedule.hpp"

#include <Eigen/Eigenvalues>

namespace ergo {

StepSchedule::StepSchedule(double C, double mu) : c_(C), mu_(mu) {
  if (!(C > 0.0)) throw parameter_error("StepSchedule: C must be > 0");
  if (!(mu > 0.0 && mu <= 1.0)) throw parameter_error("StepSchedule: mu must lie in (0,1]");
}

double ScheduleAccumulator::Gamma_r(int r) const {
  switch (r) {
    case 1: return sum1_.value();
    case 2: return sum2_.value();
    case 3: return sum3_.value();
    default:
      if (r == extra_r_) return sum_extra_.value();
      throw parameter_error("ScheduleAccumulator: power " + std::to_string(r) + " not tracked");
  }
}

MatrixXd matrix_sqrt_psd(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw parameter_error("matrix_sqrt_psd: matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + a.cwiseAbs().maxCoeff())) {
    throw parameter_error("matrix_sqrt_psd: matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
  VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10) {
      throw parameter_error("matrix_sqrt_psd: eigenvalue " + std::to_string(ev[i]) +
                            " below PSD tolerance");
    }
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

CorrelationSpec make_correlation(const MatrixXd& rho) {
  if (rho.rows() != rho.cols()) throw parameter_error("make_correlation: rho must be square");
  int q = static_cast<int>(rho.rows());
  MatrixXd gap = MatrixXd::Identity(q, q) - rho.transpose() * rho;
  CorrelationSpec spec;
  spec.rho = rho;
  spec.T = matrix_sqrt_psd(gap);  // throws if rho is inadmissible
  spec.identity = rho.isApprox(MatrixXd::Identity(q, q), 0.0);
  if (spec.identity) spec.T.setZero();
  return spec;
}

CorrelationSpec make_correlation_scalar(double rho, int q) {
  return make_correlation(rho * MatrixXd::Identity(q, q));
}

}  // namespace ergo
