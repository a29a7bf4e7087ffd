#include "ergo/noise.hpp"

namespace ergo {

void NoiseStream::draw(Eigen::Ref<VectorXd> out) {
  if (dist_ == NoiseDist::Gaussian) {
    for (int i = 0; i < q_; ++i) out[i] = rng_.gaussian();
  } else {
    for (int i = 0; i < q_; ++i) out[i] = rng_.rademacher();
  }
}

void NoiseStream::next(const CorrelationSpec& corr, MacroNoise& out) {
  draw(out.z1);
  draw(out.z2);
  draw(out.v1);
  draw(out.v2);
  out.u = (out.z1 + out.z2) * M_SQRT1_2;
  if (corr.identity) {
    out.zrho1 = out.z1;
    out.zrho2 = out.z2;
  } else {
    out.zrho1.noalias() = corr.rho.transpose() * out.z1;
    out.zrho1.noalias() += corr.T * out.v1;
    out.zrho2.noalias() = corr.rho.transpose() * out.z2;
    out.zrho2.noalias() += corr.T * out.v2;
  }
}

}  // namespace ergo
