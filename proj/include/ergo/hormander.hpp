#pragma once

#include "ergo/model.hpp"

namespace ergo {

// Numerical rank at x of {A_1..A_q} plus Lie brackets of length <= max_len
// among the Stratonovich fields A_0..A_q, where
//   A_0 = b - 1/2 sum_j (D A_j) A_j,   A_j = sigma column j.
// Brackets are nested central differences; rank counts singular values above
// 1e-6 times the largest.
int hormander_rank(const Model& model, const VectorXd& x, int max_bracket_length);

}  // namespace ergo
