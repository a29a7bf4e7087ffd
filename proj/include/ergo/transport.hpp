#pragma once

#include "ergo/metric.hpp"
#include "ergo/model.hpp"
#include "ergo/nils.hpp"

#include <vector>

namespace ergo {

// Discretized nu: atoms with positive weights summing to 1.
struct DiscreteMarginal {
  std::vector<VectorXd> atoms;
  VectorXd weights;

  static DiscreteMarginal uniform(std::vector<VectorXd> atoms);
  void validate() const;  // weights sum to 1 within 1e-12, all positive
  int size() const { return static_cast<int>(atoms.size()); }
};

// n x n coupling with both marginals equal to the atom weights.
struct DiscreteCoupling {
  MatrixXd m;
};

// u.s.c. envelope of Lambda_S on the atom grid: off-diagonal entries are the
// NILS exponent, diagonal entries the sup-direction extension.
MatrixXd usc_nils_matrix(const Model& model, const MetricS& s, const DiscreteMarginal& marginal,
                         const SphereOptOptions& opts = {});

struct TransportSolution {
  double value = 0.0;
  DiscreteCoupling coupling;
  VectorXd row_potential, col_potential;  // simplex duals (u, v)
  int iterations = 0;
};

// Low-level transportation solve with arbitrary positive weights (row sums
// = col sums = weights). All pivot arithmetic is additive, so dyadic costs
// with integer weights stay exact.
TransportSolution solve_transportation(const MatrixXd& cost, const VectorXd& weights);

// Exact maximization of sum c_ij m_ij over couplings with both marginals
// equal to the atom weights, by a tree-based transportation simplex.
TransportSolution max_coupling_value(const MatrixXd& cost, const DiscreteMarginal& marginal);

struct DualSolution {
  VectorXd phi;
  double value = 0.0;
  int iterations = 0;
};

// Symmetric Kantorovich dual: minimize sum w_i phi_i subject to
// phi_i + phi_j >= cost_ij, solved by an independent revised simplex on its
// LP dual (so primal/dual agreement is a genuine cross-check).
DualSolution kantorovich_dual(const MatrixXd& cost, const DiscreteMarginal& marginal);

struct TransportTestReport {
  double primal = 0.0;
  double dual = 0.0;
  double usc_diagonal_integral = 0.0;  // int Lambda-bar(x,x) d nu-hat, reported alongside
  bool negative = false;
  int atoms = 0;
};

// Uniform-weight subsample of at most n_atoms points, skipping
// near-duplicates that would land inside the diagonal band.
DiscreteMarginal subsample_marginal(const std::vector<VectorXd>& nu_samples, int n_atoms,
                                    const MetricS& s, std::uint64_t seed);

// Strengthened weak-confluence evidence: subsample n_atoms equilibrated
// points, build the u.s.c. matrix, solve primal + dual.
TransportTestReport weak_confluence_transport_test(const Model& model, const MetricS& s,
                                                   const std::vector<VectorXd>& nu_samples,
                                                   int n_atoms, std::uint64_t seed);

}  // namespace ergo
