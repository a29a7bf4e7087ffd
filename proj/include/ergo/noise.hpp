#pragma once

#include "ergo/rng.hpp"
#include "ergo/schedule.hpp"

namespace ergo {

enum class NoiseDist {
  Gaussian,    // default, matches the bias expansions
  Rademacher,  // stress-test alternative; changes the second-order bias constant
};

// One macro step of coupled noise: U_n drives the full-step scheme, the two
// Z^(rho) halves drive the half-step scheme. Raw Z/V draws are kept visible
// so the defining identities stay testable.
struct MacroNoise {
  VectorXd z1, z2, v1, v2;
  VectorXd u;            // (z1 + z2)/sqrt(2)
  VectorXd zrho1, zrho2; // rho^T z_k + T v_k

  explicit MacroNoise(int q) : z1(q), z2(q), v1(q), v2(q), u(q), zrho1(q), zrho2(q) {}
};

// Single-owner stream; parallel replications use independent substreams.
class NoiseStream {
 public:
  NoiseStream(int q, std::uint64_t seed, std::uint64_t stream = 0,
              NoiseDist dist = NoiseDist::Gaussian)
      : q_(q), dist_(dist), rng_(seed, stream) {}

  void next(const CorrelationSpec& corr, MacroNoise& out);

  // Independent q-vector draw (for the continuous-time emulation).
  void draw(Eigen::Ref<VectorXd> out);

  int q() const { return q_; }

 private:
  int q_;
  NoiseDist dist_;
  Rng rng_;
};

}  // namespace ergo
