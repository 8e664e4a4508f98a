#pragma once

#include "vpfpnn/network.hpp"

namespace vpfpnn {

struct AdamSchedule {
  double base_lr = 1e-3;
  double gamma = 0.5;  // step-decay factor
  int period = 2000;   // epochs per decay step
};

struct AdamState {
  ParamGradient m;  // first moments
  ParamGradient v;  // second moments
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  AdamSchedule schedule;

  static AdamState like(const MlpParams& params, const AdamSchedule& schedule);
  double current_lr() const;
};

// Standard Adam with bias correction and step-decay learning rate.
void adam_step(MlpParams& params, const ParamGradient& grads, AdamState& state);

}  // namespace vpfpnn
