#include "vpfpnn/optimizer.hpp"

#include <cmath>

#include "vpfpnn/errors.hpp"

namespace vpfpnn {

AdamState AdamState::like(const MlpParams& params, const AdamSchedule& schedule) {
  AdamState s;
  s.m = ParamGradient::zeros_like(params);
  s.v = ParamGradient::zeros_like(params);
  s.schedule = schedule;
  return s;
}

double AdamState::current_lr() const {
  const long k = schedule.period > 0 ? step_count / schedule.period : 0;
  return schedule.base_lr * std::pow(schedule.gamma, static_cast<double>(k));
}

void adam_step(MlpParams& params, const ParamGradient& grads, AdamState& state) {
  if (grads.weights.size() != params.weights.size())
    throw ConfigError("adam_step: gradient/parameter shape mismatch");
  const double lr = state.current_lr();
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  for (size_t l = 0; l < params.weights.size(); ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() ||
        grads.weights[l].cols() != params.weights[l].cols())
      throw ConfigError("adam_step: gradient/parameter shape mismatch");
    auto update = [&](auto& p, auto& g, auto& m, auto& v) {
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v.array() = state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square();
      p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps_hat);
    };
    update(params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]);
    update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]);
  }
}

}  // namespace vpfpnn
