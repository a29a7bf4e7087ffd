#pragma once

#include "ergo/model.hpp"
#include "ergo/noise.hpp"
#include "ergo/schedule.hpp"

#include <functional>

namespace ergo {

// One explicit Euler step: x + gamma b(x) + sqrt(gamma) sigma(x) noise.
VectorXd euler_step(const Model& model, const VectorXd& x, double gamma, const VectorXd& noise);

// State of the coupled (full-step, half-step) scheme after n macro steps:
// x = X_n, y = Y_2n, y_mid = Y_{2n-1}.
struct PairState {
  VectorXd x, y, y_mid;
  long n = 0;

  PairState(const VectorXd& x0, const VectorXd& y0) : x(x0), y(y0), y_mid(y0) {}
  explicit PairState(const VectorXd& x0) : PairState(x0, x0) {}
};

// Scratch buffers so the macro-step loop does not allocate.
class PairStepper {
 public:
  PairStepper(const Model& model, const StepSchedule& sched, const CorrelationSpec& corr)
      : model_(&model),
        corr_(&corr),
        acc_(sched),
        noise_(model.q),
        b_(model.d),
        sig_(model.d, model.q) {}

  // One macro step: X advances once with step gamma_n, Y twice with gamma_n/2.
  void advance(PairState& state, NoiseStream& stream);

  const ScheduleAccumulator& schedule() const { return acc_; }

 private:
  void half_step(VectorXd& y, double half_gamma, const VectorXd& noise, long step);

  const Model* model_;
  const CorrelationSpec* corr_;
  ScheduleAccumulator acc_;
  MacroNoise noise_;
  VectorXd b_;
  MatrixXd sig_;
};

// Free-function form of one macro step (spec surface); heavy loops should
// hold a PairStepper instead.
void advance_pair(PairState& state, const Model& model, ScheduleAccumulator& acc,
                  const CorrelationSpec& corr, NoiseStream& stream);

using PairObserver = std::function<void(double t, const VectorXd& x1, const VectorXd& x2)>;

// Fixed-step Euler emulation of the duplicated diffusion on [0, T]: both
// components share the Brownian path through W^(rho) = rho^T W + T W~.
// The observer sees every step including t = 0.
void simulate_duplicated_continuous(const Model& model, const VectorXd& x1, const VectorXd& x2,
                                    const CorrelationSpec& corr, double dt, double T,
                                    const PairObserver& observer, NoiseStream& stream);

}  // namespace ergo
