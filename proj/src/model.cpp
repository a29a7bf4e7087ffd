#include "ergo/model.hpp"

namespace ergo {

MatrixXd Model::jacobian_at(const VectorXd& x) const {
  if (analytic_jacobian) {
    MatrixXd out(d, d);
    analytic_jacobian(x, out);
    return out;
  }
  MatrixXd jac(d, d);
  VectorXd xp = x, xm = x, bp(d), bm(d);
  for (int k = 0; k < d; ++k) {
    double h = fd_step(x[k]);
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    drift(xp, bp);
    drift(xm, bm);
    jac.col(k) = (bp - bm) / (xp[k] - xm[k]);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return jac;
}

std::vector<MatrixXd> Model::sigma_gradient_at(const VectorXd& x) const {
  std::vector<MatrixXd> grad(d, MatrixXd(d, q));
  if (analytic_sigma_gradient) {
    analytic_sigma_gradient(x, grad);
    return grad;
  }
  VectorXd xp = x, xm = x;
  MatrixXd sp(d, q), sm(d, q);
  for (int k = 0; k < d; ++k) {
    double h = fd_step(x[k]);
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    diffusion(xp, sp);
    diffusion(xm, sm);
    grad[k] = (sp - sm) / (xp[k] - xm[k]);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return grad;
}

MatrixXd Model::sigma_directional(const VectorXd& x, const VectorXd& u) const {
  if (analytic_sigma_gradient) {
    auto grad = sigma_gradient_at(x);
    MatrixXd out = MatrixXd::Zero(d, q);
    for (int k = 0; k < d; ++k) out += u[k] * grad[k];
    return out;
  }
  // One directional central difference instead of d coordinate ones.
  double h = fd_step(x.norm());
  MatrixXd sp(d, q), sm(d, q);
  diffusion(x + h * u, sp);
  diffusion(x - h * u, sm);
  return (sp - sm) / (2.0 * h);
}

}  // namespace ergo
