#pragma once

#include "ergo/common.hpp"

#include <functional>
#include <vector>

namespace ergo {

// dX_t = b(X_t) dt + sigma(X_t) dW_t on R^d with q driving components.
// Callables write into caller-owned storage so the Euler inner loops stay
// allocation-free. Models are immutable after construction and shareable
// across simulation workers.
struct Model {
  int d = 0;
  int q = 0;
  std::function<void(Eigen::Ref<const VectorXd>, Eigen::Ref<VectorXd>)> drift;
  std::function<void(Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd>)> diffusion;

  // Optional analytic derivatives; finite differences otherwise.
  std::function<void(Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd>)> analytic_jacobian;
  // out[k] = d(sigma)/dx_k, a d x q matrix for each k = 0..d-1.
  std::function<void(Eigen::Ref<const VectorXd>, std::vector<MatrixXd>&)> analytic_sigma_gradient;

  VectorXd drift_at(const VectorXd& x) const {
    VectorXd out(d);
    drift(x, out);
    return out;
  }
  MatrixXd diffusion_at(const VectorXd& x) const {
    MatrixXd out(d, q);
    diffusion(x, out);
    return out;
  }

  // Jacobian of the drift, analytic when available, else central differences
  // with step fd_step per coordinate.
  MatrixXd jacobian_at(const VectorXd& x) const;

  // Gradient of sigma: out[k] = d(sigma)/dx_k.
  std::vector<MatrixXd> sigma_gradient_at(const VectorXd& x) const;

  // Directional derivative of sigma along u.
  MatrixXd sigma_directional(const VectorXd& x, const VectorXd& u) const;
};

}  // namespace ergo
