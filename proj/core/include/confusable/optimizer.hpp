#pragma once

#include <cstddef>
#include <string_view>

#include "confusable/embedding.hpp"

namespace confusable {

enum class OptimizerKind { Sgd, Adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view text);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  LearnerParams first_moment;   // empty until the first Adam step
  LearnerParams second_moment;

  static OptimizerState for_params(OptimizerKind kind, const LearnerParams& params);
};

// One descent step along -grad: plain SGD, or bias-corrected Adam.
void sgd_step(LearnerParams& params, const LearnerParams& grad, double lr, OptimizerState& state);

}  // namespace confusable
