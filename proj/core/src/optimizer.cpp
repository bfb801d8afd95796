#include "confusable/optimizer.hpp"

#include <cmath>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(std::string_view text) {
  if (text == "sgd") return OptimizerKind::Sgd;
  if (text == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd, adam)");
}

OptimizerState OptimizerState::for_params(OptimizerKind kind, const LearnerParams& params) {
  OptimizerState state;
  state.kind = kind;
  if (kind == OptimizerKind::Adam) {
    state.first_moment = LearnerParams::zeros_like(params);
    state.second_moment = LearnerParams::zeros_like(params);
  }
  return state;
}

void sgd_step(LearnerParams& params, const LearnerParams& grad, double lr, OptimizerState& state) {
  if (grad.parameter_count() != params.parameter_count() ||
      grad.num_layers() != params.num_layers()) {
    throw InputError("gradient shape does not match parameters");
  }
  ++state.step;
  auto values = params.flatten();
  const auto g = grad.flatten();
  if (state.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * g[i];
    params.assign_flat(values);
    return;
  }
  if (state.first_moment.parameter_count() != params.parameter_count()) {
    state.first_moment = LearnerParams::zeros_like(params);
    state.second_moment = LearnerParams::zeros_like(params);
  }
  auto m = state.first_moment.flatten();
  auto v = state.second_moment.flatten();
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(state.beta1, t);
  const double correct2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correct1;
    const double v_hat = v[i] / correct2;
    values[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  params.assign_flat(values);
  state.first_moment.assign_flat(m);
  state.second_moment.assign_flat(v);
}

}  // namespace confusable
