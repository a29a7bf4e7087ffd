#include "ergo/engine.hpp"

namespace ergo {

VectorXd euler_step(const Model& model, const VectorXd& x, double gamma, const VectorXd& noise) {
  if (!(gamma > 0.0)) throw parameter_error("euler_step: gamma must be > 0");
  VectorXd out(model.d);
  model.drift(x, out);
  out = x + gamma * out;
  MatrixXd sig(model.d, model.q);
  model.diffusion(x, sig);
  out.noalias() += std::sqrt(gamma) * (sig * noise);
  if (is_divergent(out)) throw divergence_error("euler_step: divergent state", 0);
  return out;
}

void PairStepper::half_step(VectorXd& y, double half_gamma, const VectorXd& noise, long step) {
  model_->drift(y, b_);
  model_->diffusion(y, sig_);
  y += half_gamma * b_;
  y.noalias() += std::sqrt(half_gamma) * (sig_ * noise);
  if (is_divergent(y)) throw divergence_error("advance_pair: half-step scheme divergent", step);
}

void PairStepper::advance(PairState& state, NoiseStream& stream) {
  double gamma = acc_.next();
  long n = acc_.n();
  stream.next(*corr_, noise_);

  // Full-step scheme.
  model_->drift(state.x, b_);
  model_->diffusion(state.x, sig_);
  state.x += gamma * b_;
  state.x.noalias() += std::sqrt(gamma) * (sig_ * noise_.u);
  if (is_divergent(state.x)) throw divergence_error("advance_pair: full-step scheme divergent", n);

  // Half-step scheme, twice; the intermediate point is kept for the
  // half-weight empirical measure.
  half_step(state.y, 0.5 * gamma, noise_.zrho1, n);
  state.y_mid = state.y;
  half_step(state.y, 0.5 * gamma, noise_.zrho2, n);
  state.n = n;
}

void advance_pair(PairState& state, const Model& model, ScheduleAccumulator& acc,
                  const CorrelationSpec& corr, NoiseStream& stream) {
  double gamma = acc.next();
  long n = acc.n();
  MacroNoise noise(model.q);
  stream.next(corr, noise);
  state.x = euler_step(model, state.x, gamma, noise.u);
  state.y_mid = euler_step(model, state.y, 0.5 * gamma, noise.zrho1);
  state.y = euler_step(model, state.y_mid, 0.5 * gamma, noise.zrho2);
  state.n = n;
}

void simulate_duplicated_continuous(const Model& model, const VectorXd& x1, const VectorXd& x2,
                                    const CorrelationSpec& corr, double dt, double T,
                                    const PairObserver& observer, NoiseStream& stream) {
  if (!(dt > 0.0 && dt <= T)) {
    throw parameter_error("simulate_duplicated_continuous: need 0 < dt <= T");
  }
  VectorXd a = x1, b = x2;
  VectorXd z(model.q), ztilde(model.q), z2(model.q);
  VectorXd drift(model.d);
  MatrixXd sig(model.d, model.q);
  double sqdt = std::sqrt(dt);
  long steps = static_cast<long>(std::llround(T / dt));
  observer(0.0, a, b);
  for (long k = 1; k <= steps; ++k) {
    stream.draw(z);
    const VectorXd* noise2 = &z;  // shared-noise path: same array for both
    if (!corr.identity) {
      stream.draw(ztilde);
      z2.noalias() = corr.rho.transpose() * z;
      z2.noalias() += corr.T * ztilde;
      noise2 = &z2;
    }
    model.drift(a, drift);
    model.diffusion(a, sig);
    a += dt * drift;
    a.noalias() += sqdt * (sig * z);
    model.drift(b, drift);
    model.diffusion(b, sig);
    b += dt * drift;
    b.noalias() += sqdt * (sig * (*noise2));
    if (is_divergent(a) || is_divergent(b)) {
      throw divergence_error("simulate_duplicated_continuous: divergent state", k);
    }
    observer(k * dt, a, b);
  }
}

}  // namespace ergo
