#include "ergo/transport.hpp"

#include "ergo/empirical.hpp"
#include "ergo/rng.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace ergo {

DiscreteMarginal DiscreteMarginal::uniform(std::vector<VectorXd> atoms) {
  DiscreteMarginal m;
  m.weights = VectorXd::Constant(static_cast<int>(atoms.size()),
                                 1.0 / static_cast<double>(atoms.size()));
  m.atoms = std::move(atoms);
  m.validate();
  return m;
}

void DiscreteMarginal::validate() const {
  if (atoms.empty()) throw parameter_error("DiscreteMarginal: no atoms");
  if (weights.size() != static_cast<int>(atoms.size())) {
    throw parameter_error("DiscreteMarginal: weight/atom count mismatch");
  }
  for (int i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) throw parameter_error("DiscreteMarginal: weights must be positive");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw parameter_error("DiscreteMarginal: weights must sum to 1");
  }
}

MatrixXd usc_nils_matrix(const Model& model, const MetricS& s, const DiscreteMarginal& marginal,
                         const SphereOptOptions& opts) {
  int n = marginal.size();
  MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = diagonal_nils_sup(model, s, marginal.atoms[static_cast<std::size_t>(i)], opts).value;
    for (int j = i + 1; j < n; ++j) {
      const VectorXd& x = marginal.atoms[static_cast<std::size_t>(i)];
      const VectorXd& y = marginal.atoms[static_cast<std::size_t>(j)];
      double delta = diagonal_delta(s.norm(x), s.norm(y));
      double v;
      if (s.norm(x - y) < delta) {
        // Atoms inside the diagonal band: the u.s.c. envelope value is the
        // sup-direction extension at the midpoint.
        v = diagonal_nils_sup(model, s, 0.5 * (x + y), opts).value;
      } else {
        v = nils(model, s, x, y);
      }
      out(i, j) = out(j, i) = v;
    }
  }
  return out;
}

namespace {

// ---- transportation simplex (tree basis, MODI pricing) ----

struct TreeSimplex {
  int n;                         // rows == cols == n
  const MatrixXd& c;
  MatrixXd plan;
  std::vector<std::vector<int>> adj;  // node -> incident basic cells
  std::vector<int> cell_row, cell_col;
  std::vector<char> basic;            // n*n flags
  VectorXd u, v;

  explicit TreeSimplex(const MatrixXd& cost, const VectorXd& w)
      : n(static_cast<int>(cost.rows())),
        c(cost),
        plan(MatrixXd::Zero(cost.rows(), cost.cols())),
        adj(static_cast<std::size_t>(2 * cost.rows())),
        basic(static_cast<std::size_t>(cost.rows() * cost.cols()), 0),
        u(cost.rows()),
        v(cost.rows()) {
    northwest_corner(w);
  }

  int cell_id(int i, int j) const { return i * n + j; }

  void add_basic(int i, int j) {
    basic[static_cast<std::size_t>(cell_id(i, j))] = 1;
    int id = static_cast<int>(cell_row.size());
    cell_row.push_back(i);
    cell_col.push_back(j);
    adj[static_cast<std::size_t>(i)].push_back(id);
    adj[static_cast<std::size_t>(n + j)].push_back(id);
  }

  void remove_basic(int i, int j) {
    basic[static_cast<std::size_t>(cell_id(i, j))] = 0;
    for (int node : {i, n + j}) {
      auto& lst = adj[static_cast<std::size_t>(node)];
      lst.erase(std::remove_if(lst.begin(), lst.end(),
                               [&](int id) { return cell_row[static_cast<std::size_t>(id)] == i &&
                                                    cell_col[static_cast<std::size_t>(id)] == j; }),
                lst.end());
    }
  }

  void northwest_corner(const VectorXd& w) {
    VectorXd rs = w, rd = w;
    int i = 0, j = 0;
    while (true) {
      double a = std::min(rs[i], rd[j]);
      plan(i, j) = a;
      add_basic(i, j);
      rs[i] -= a;
      rd[j] -= a;
      if (i == n - 1 && j == n - 1) break;
      if (rs[i] <= 0.0 && i < n - 1) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Potentials from the spanning tree: u_i + v_j = c_ij on basic cells.
  void compute_potentials() {
    std::vector<char> seen(static_cast<std::size_t>(2 * n), 0);
    std::vector<int> stack{0};
    u[0] = 0.0;
    seen[0] = 1;
    while (!stack.empty()) {
      int node = stack.back();
      stack.pop_back();
      for (int id : adj[static_cast<std::size_t>(node)]) {
        int i = cell_row[static_cast<std::size_t>(id)];
        int j = cell_col[static_cast<std::size_t>(id)];
        int other = (node < n) ? n + j : i;
        if (seen[static_cast<std::size_t>(other)]) continue;
        seen[static_cast<std::size_t>(other)] = 1;
        if (other >= n) {
          v[other - n] = c(i, j) - u[i];
        } else {
          u[other] = c(i, j) - v[j];
        }
        stack.push_back(other);
      }
    }
  }

  // Tree path between row node i and col node n+j as a list of basic cells.
  std::vector<int> tree_path(int i, int j) {
    std::vector<int> parent_edge(static_cast<std::size_t>(2 * n), -1);
    std::vector<int> parent_node(static_cast<std::size_t>(2 * n), -1);
    std::vector<char> seen(static_cast<std::size_t>(2 * n), 0);
    std::vector<int> queue{i};
    seen[static_cast<std::size_t>(i)] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int node = queue[h];
      if (node == n + j) break;
      for (int id : adj[static_cast<std::size_t>(node)]) {
        int other = (node < n) ? n + cell_col[static_cast<std::size_t>(id)]
                               : cell_row[static_cast<std::size_t>(id)];
        if (seen[static_cast<std::size_t>(other)]) continue;
        seen[static_cast<std::size_t>(other)] = 1;
        parent_edge[static_cast<std::size_t>(other)] = id;
        parent_node[static_cast<std::size_t>(other)] = node;
        queue.push_back(other);
      }
    }
    std::vector<int> path;
    int node = n + j;
    while (node != i) {
      path.push_back(parent_edge[static_cast<std::size_t>(node)]);
      node = parent_node[static_cast<std::size_t>(node)];
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // Returns iterations used.
  int solve() {
    const double tol = 1e-11 * (1.0 + c.cwiseAbs().maxCoeff());
    const long max_iter = 2000L * n + 20000L;
    for (long iter = 0; iter < max_iter; ++iter) {
      compute_potentials();
      int bi = -1, bj = -1;
      double best = tol;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (basic[static_cast<std::size_t>(cell_id(i, j))]) continue;
          double rc = c(i, j) - u[i] - v[j];
          if (rc > best) {
            best = rc;
            bi = i;
            bj = j;
          }
        }
      }
      if (bi < 0) return static_cast<int>(iter);

      // Unique cycle: entering cell plus the tree path col(bj) -> row(bi).
      std::vector<int> path = tree_path(bi, bj);
      // Signs alternate along the path starting with '-' (the entering cell
      // itself is the '+').
      double theta = std::numeric_limits<double>::infinity();
      int leave = -1;
      for (std::size_t k = 0; k < path.size(); k += 2) {
        int id = path[k];
        double a = plan(cell_row[static_cast<std::size_t>(id)], cell_col[static_cast<std::size_t>(id)]);
        if (a < theta) {
          theta = a;
          leave = id;
        }
      }
      for (std::size_t k = 0; k < path.size(); ++k) {
        int id = path[k];
        double sgn = (k % 2 == 0) ? -1.0 : 1.0;
        plan(cell_row[static_cast<std::size_t>(id)], cell_col[static_cast<std::size_t>(id)]) +=
            sgn * theta;
      }
      plan(bi, bj) += theta;
      int li = cell_row[static_cast<std::size_t>(leave)];
      int lj = cell_col[static_cast<std::size_t>(leave)];
      remove_basic(li, lj);
      add_basic(bi, bj);
    }
    throw std::runtime_error("transportation simplex: iteration cap hit");
  }
};

}  // namespace

TransportSolution solve_transportation(const MatrixXd& cost, const VectorXd& weights) {
  int n = static_cast<int>(weights.size());
  if (cost.rows() != n || cost.cols() != n) {
    throw parameter_error("solve_transportation: cost must be n x n");
  }
  if (!cost.allFinite()) throw parameter_error("solve_transportation: non-finite cost entries");
  for (int i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw parameter_error("solve_transportation: weights must be > 0");
  }
  TreeSimplex simplex(cost, weights);
  TransportSolution sol;
  sol.iterations = simplex.solve();
  sol.coupling.m = simplex.plan;
  sol.value = (cost.array() * simplex.plan.array()).sum();
  simplex.compute_potentials();
  sol.row_potential = simplex.u;
  sol.col_potential = simplex.v;

  // Marginal feasibility is part of the contract.
  double scale = weights.maxCoeff();
  for (int i = 0; i < n; ++i) {
    if (std::abs(simplex.plan.row(i).sum() - weights[i]) > 1e-10 * std::max(1.0, scale) ||
        std::abs(simplex.plan.col(i).sum() - weights[i]) > 1e-10 * std::max(1.0, scale)) {
      throw std::runtime_error("solve_transportation: marginal constraint violated");
    }
  }
  return sol;
}

TransportSolution max_coupling_value(const MatrixXd& cost, const DiscreteMarginal& marginal) {
  marginal.validate();
  return solve_transportation(cost, marginal.weights);
}

namespace {

// Revised simplex (dense explicit inverse) for
//   max sum_{i<=j} c_ij y_ij  s.t.  A y = w, y >= 0,
// where column (i,j) is e_i + e_j. Solves the symmetric Kantorovich dual via
// its multipliers.
struct PairColumnSimplex {
  int n;
  const MatrixXd& c;
  VectorXd w;  // rhs = 2 * marginal weights (phi enters the row for x and y)
  std::vector<std::pair<int, int>> basis;  // basic columns
  MatrixXd binv;
  VectorXd xb;
  VectorXd pi;

  PairColumnSimplex(const MatrixXd& cost, const VectorXd& weights)
      : n(static_cast<int>(cost.rows())), c(cost), w(2.0 * weights) {
    basis.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) basis.emplace_back(i, i);
    binv = MatrixXd::Identity(n, n) * 0.5;  // B = 2I
    xb = 0.5 * w;
  }

  VectorXd column(int i, int j) const {
    VectorXd a = VectorXd::Zero(n);
    a[i] += 1.0;
    a[j] += 1.0;
    return a;
  }

  void refactor() {
    MatrixXd b = MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      auto [i, j] = basis[static_cast<std::size_t>(k)];
      b(i, k) += 1.0;
      b(j, k) += 1.0;
    }
    binv = b.partialPivLu().inverse();
    xb = binv * w;
  }

  int solve(double tol) {
    const long max_iter = 400L * n + 20000L;
    long stall = 0;
    for (long iter = 0; iter < max_iter; ++iter) {
      // Multipliers pi = B^{-T} c_B.
      VectorXd cb(n);
      for (int k = 0; k < n; ++k) {
        cb[k] = c(basis[static_cast<std::size_t>(k)].first, basis[static_cast<std::size_t>(k)].second);
      }
      pi = binv.transpose() * cb;

      // Dantzig pricing normally; first-positive (Bland) after a stall run
      // to break potential cycles.
      bool bland = stall > 2L * n + 50;
      int bi = -1, bj = -1;
      double best = tol;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          double rc = c(i, j) - pi[i] - pi[j];
          if (rc > best) {
            best = rc;
            bi = i;
            bj = j;
            if (bland) goto entering_found;
          }
        }
      }
    entering_found:
      if (bi < 0) return static_cast<int>(iter);

      VectorXd dir = binv * column(bi, bj);
      int leave = -1;
      double step = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n; ++k) {
        if (dir[k] > 1e-12) {
          double ratio = xb[k] / dir[k];
          if (ratio < step - 1e-15 || (std::abs(ratio - step) <= 1e-15 && leave >= 0 &&
                                       basis[static_cast<std::size_t>(k)] <
                                           basis[static_cast<std::size_t>(leave)])) {
            step = ratio;
            leave = k;
          }
        }
      }
      if (leave < 0) throw std::runtime_error("kantorovich_dual: unbounded LP (unexpected)");

      double obj_gain = best * step;
      if (obj_gain <= 1e-15) {
        ++stall;
      } else {
        stall = 0;
      }

      // Pivot: replace basis[leave], rank-1 update of the inverse.
      basis[static_cast<std::size_t>(leave)] = {bi, bj};
      double piv = dir[leave];
      VectorXd row = binv.row(leave) / piv;
      for (int k = 0; k < n; ++k) {
        if (k == leave) continue;
        binv.row(k) -= dir[k] * row.transpose();
      }
      binv.row(leave) = row.transpose();
      xb = binv * w;
      if (iter % 256 == 255) refactor();
    }
    throw std::runtime_error("kantorovich_dual: iteration cap hit");
  }
};

}  // namespace

DualSolution kantorovich_dual(const MatrixXd& cost, const DiscreteMarginal& marginal) {
  marginal.validate();
  int n = marginal.size();
  if (cost.rows() != n || cost.cols() != n) {
    throw parameter_error("kantorovich_dual: cost must be n x n");
  }
  if ((cost - cost.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + cost.cwiseAbs().maxCoeff())) {
    throw parameter_error("kantorovich_dual: cost must be symmetric");
  }
  MatrixXd symmetric = 0.5 * (cost + cost.transpose());
  PairColumnSimplex simplex(symmetric, marginal.weights);
  double tol = 1e-11 * (1.0 + symmetric.cwiseAbs().maxCoeff());
  DualSolution sol;
  sol.iterations = simplex.solve(tol);
  sol.phi = simplex.pi;
  // Transportation dual value: min sum (u_i + v_i) w_i with u = v = phi.
  sol.value = 2.0 * simplex.pi.dot(marginal.weights);
  return sol;
}

DiscreteMarginal subsample_marginal(const std::vector<VectorXd>& nu_samples, int n_atoms,
                                    const MetricS& s, std::uint64_t seed) {
  if (nu_samples.empty()) throw parameter_error("subsample_marginal: no samples");
  if (n_atoms > 500) throw parameter_error("subsample_marginal: capped at 500 atoms");
  n_atoms = std::min<int>(n_atoms, static_cast<int>(nu_samples.size()));

  Rng rng(seed);
  std::vector<std::size_t> order(nu_samples.size());
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  std::vector<VectorXd> atoms;
  for (std::size_t idx : order) {
    if (static_cast<int>(atoms.size()) >= n_atoms) break;
    const VectorXd& cand = nu_samples[idx];
    bool ok = true;
    for (const auto& a : atoms) {
      if (s.norm(cand - a) < 10.0 * diagonal_delta(s.norm(cand), s.norm(a))) {
        ok = false;
        break;
      }
    }
    if (ok) atoms.push_back(cand);
  }
  if (atoms.size() < 2) throw parameter_error("subsample_marginal: degenerate sample");
  return DiscreteMarginal::uniform(std::move(atoms));
}

TransportTestReport weak_confluence_transport_test(const Model& model, const MetricS& s,
                                                   const std::vector<VectorXd>& nu_samples,
                                                   int n_atoms, std::uint64_t seed) {
  DiscreteMarginal marginal = subsample_marginal(nu_samples, n_atoms, s, seed);
  MatrixXd lam = usc_nils_matrix(model, s, marginal);
  TransportTestReport rep;
  rep.atoms = marginal.size();
  rep.primal = max_coupling_value(lam, marginal).value;
  rep.dual = kantorovich_dual(lam, marginal).value;
  rep.usc_diagonal_integral = lam.diagonal().dot(marginal.weights);
  rep.negative = rep.primal < 0.0;
  return rep;
}

}  // namespace ergo
