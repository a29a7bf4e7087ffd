#pragma once

#include "ergo/model.hpp"

#include <vector>

namespace ergo {

// Classical 1D diffusion transforms on a working range [lo, hi]:
// scale p(x) = int_{x0}^x exp(-int_{x0}^xi 2b/sigma^2) dxi and speed density
// 1/(sigma^2 p'). Tabulated on a uniform grid with exact local corrections.
class OneDimTheory {
 public:
  double x0() const { return x0_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double p(double x) const;
  double p_prime(double x) const;
  double speed_density(double x) const;
  double speed_mass() const { return speed_mass_; }

  // Window evidence that M(R) is finite: the speed density near the range
  // ends contributes negligibly. When false, M(R) = +infinity cannot be
  // ruled out from this window (null-recurrent-looking).
  bool speed_mass_tail_negligible() const { return mass_tail_negligible_; }

  // Growth flags: p appears to diverge toward the range ends (evidence for
  // p(+-inf) = +-inf).
  bool p_diverges_pos() const { return p_grow_pos_; }
  bool p_diverges_neg() const { return p_grow_neg_; }

 private:
  friend OneDimTheory scale_speed_1d(const Model&, double, double, double, int);

  double phi(double x) const;  // int_{x0}^x 2b/sigma^2

  double x0_ = 0.0, lo_ = 0.0, hi_ = 0.0;
  double speed_mass_ = 0.0;
  bool mass_tail_negligible_ = false;
  bool p_grow_pos_ = false, p_grow_neg_ = false;
  std::vector<double> grid_x_, phi_grid_, p_grid_;
  std::function<double(double)> b_, sig_;
};

// Throws quadrature_error naming the point when 2b/sigma^2 fails to
// integrate inside the range (interior singularity).
OneDimTheory scale_speed_1d(const Model& model_1d, double x0, double lo, double hi,
                            int grid_points = 2001);

}  // namespace ergo
