#pragma once

#include "ergo/common.hpp"

#include <vector>

namespace ergo {

// Symmetric order-k derivative tensor of a scalar function in dimension d,
// stored dense (d^k entries, index = sum i_r d^r little-endian).
struct SymTensor {
  int d = 0;
  int order = 0;
  std::vector<double> data;

  double at(const std::vector<int>& idx) const;
  static SymTensor zero(int d, int order);
};

// All pair partitions of {0..2m-1}; 1, 3, 15 pairings for m = 1, 2, 3.
std::vector<std::vector<std::pair<int, int>>> pair_partitions(int m);

// E[ T . b^{(x) n_b} (sigma U)^{(x) n_u} ] for U standard Gaussian:
// Isserlis expansion of the n_u Gaussian slots with covariance sigma sigma^T.
// n_b + n_u must equal T.order and n_u must be even.
double gaussian_contraction(const SymTensor& t, const VectorXd& b, const MatrixXd& sigma_cov,
                            int n_b, int n_u);

}  // namespace ergo
