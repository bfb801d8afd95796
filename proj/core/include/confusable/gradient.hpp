#pragma once

#include <span>

#include "confusable/dataset.hpp"
#include "confusable/embedding.hpp"
#include "confusable/learners.hpp"
#include "confusable/task_sampler.hpp"

namespace confusable {

struct EpisodeGradient {
  double objective = 0.0;  // J, identical to episode_loss on the same tasks
  LearnerParams gradient;  // d(-J)/d(params), shaped like params
};

// Exact gradient of the negative episode objective by backpropagation through
// the learner head and the embedding. Queries whose target probability falls
// below kProbabilityFloor contribute the clamped constant and no gradient.
// Throws NumericalError naming the first layer with a non-finite gradient.
EpisodeGradient loss_gradient(const LearnerParams& params, const Dataset& dataset,
                              std::span<const EpisodeTask> tasks, LearnerKind kind,
                              double temperature = 1.0);

}  // namespace confusable
