#pragma once

#include "ergo/metric.hpp"
#include "ergo/model.hpp"

namespace ergo {

// Non-infinitesimal S-Lyapunov exponent
//   Lambda_S(x,y) = (b(x)-b(y)|x-y)_S / |x-y|_S^2
//                 + 1/2 ||sigma(x)-sigma(y)||_S^2 / |x-y|_S^2
//                 - |(sigma^T(x)-sigma^T(y)) S (x-y)|^2 / |x-y|_S^4.
// Undefined on the diagonal band |x-y|_S < diagonal_delta.
double nils(const Model& model, const MetricS& s, const VectorXd& x, const VectorXd& y);

// (S,theta)-confluence function
//   Psi(x,y) = (b(x)-b(y)|x-y)_S + 1/2 ||sigma(x)-sigma(y)||_S^2
//            - theta(|x-y|_S^2) |(sigma^T(x)-sigma^T(y)) S (x-y) / |x-y|_S|^2.
double psi(const Model& model, const MetricS& s, const ThetaFunction& theta, const VectorXd& x,
           const VectorXd& y);

struct SphereOptOptions {
  int samples = 512;        // deterministic sphere sampling budget
  int refine_steps = 20;    // projected-gradient polish
  std::uint64_t seed = 17;  // random-orthogonal batches for d > 3
};

// Quadratic form of the diagonal extension along S-unit direction u:
//   u^T (S J_b + J_b^T S) u + ||(grad sigma | u)||_S^2 - 2 |(D_u sigma)^T S u|^2.
double diagonal_form(const Model& model, const MetricS& s, const VectorXd& x, const VectorXd& u);

struct DiagonalNils {
  double value = 0.0;  // 1/2 inf (or sup) of diagonal_form over |u|_S = 1
  VectorXd direction;
};

// Lower semi-continuous extension on the diagonal (infimum over directions).
DiagonalNils diagonal_nils(const Model& model, const MetricS& s, const VectorXd& x,
                           const SphereOptOptions& opts = {});

// Upper semi-continuous counterpart (supremum), used by the transport side.
DiagonalNils diagonal_nils_sup(const Model& model, const MetricS& s, const VectorXd& x,
                               const SphereOptOptions& opts = {});

}  // namespace ergo
