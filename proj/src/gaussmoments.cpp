#include "ergo/gaussmoments.hpp"

#include <functional>

namespace ergo {

double SymTensor::at(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    flat = flat * static_cast<std::size_t>(d) + static_cast<std::size_t>(idx[r]);
  }
  return data[flat];
}

SymTensor SymTensor::zero(int d, int order) {
  SymTensor t;
  t.d = d;
  t.order = order;
  std::size_t size = 1;
  for (int r = 0; r < order; ++r) size *= static_cast<std::size_t>(d);
  t.data.assign(size, 0.0);
  return t;
}

std::vector<std::vector<std::pair<int, int>>> pair_partitions(int m) {
  std::vector<std::vector<std::pair<int, int>>> out;
  std::vector<int> elems(static_cast<std::size_t>(2 * m));
  for (int i = 0; i < 2 * m; ++i) elems[static_cast<std::size_t>(i)] = i;
  std::vector<std::pair<int, int>> current;
  std::function<void(std::vector<int>&)> rec = [&](std::vector<int>& rest) {
    if (rest.empty()) {
      out.push_back(current);
      return;
    }
    int first = rest[0];
    for (std::size_t k = 1; k < rest.size(); ++k) {
      int partner = rest[k];
      std::vector<int> next;
      for (std::size_t r = 1; r < rest.size(); ++r) {
        if (r != k) next.push_back(rest[r]);
      }
      current.emplace_back(first, partner);
      rec(next);
      current.pop_back();
    }
  };
  rec(elems);
  return out;
}

double gaussian_contraction(const SymTensor& t, const VectorXd& b, const MatrixXd& sigma_cov,
                            int n_b, int n_u) {
  if (n_b + n_u != t.order) throw parameter_error("gaussian_contraction: arity mismatch");
  if (n_u % 2 != 0) throw parameter_error("gaussian_contraction: odd Gaussian power");
  const int d = t.d;
  if (n_u == 0 && n_b == 0) return t.data[0];

  auto partitions = pair_partitions(n_u / 2);
  // The first n_b tensor slots carry b, the remaining n_u slots the Gaussian
  // pairs; tensor symmetry makes the slot assignment irrelevant.
  double total = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(t.order), 0);
  std::function<double(int, const std::vector<std::pair<int, int>>&)> sum_over =
      [&](int slot, const std::vector<std::pair<int, int>>& pairing) -> double {
    if (slot == t.order) {
      double weight = 1.0;
      for (int r = 0; r < n_b; ++r) weight *= b[idx[static_cast<std::size_t>(r)]];
      for (const auto& [p, q] : pairing) {
        weight *= sigma_cov(idx[static_cast<std::size_t>(n_b + p)],
                            idx[static_cast<std::size_t>(n_b + q)]);
      }
      return weight * t.at(idx);
    }
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      idx[static_cast<std::size_t>(slot)] = i;
      s += sum_over(slot + 1, pairing);
    }
    return s;
  };
  if (n_u == 0) {
    std::vector<std::pair<int, int>> empty;
    return sum_over(0, empty);
  }
  for (const auto& pairing : partitions) total += sum_over(0, pairing);
  return total;
}

}  // namespace ergo
