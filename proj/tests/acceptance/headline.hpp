#pragma once

#include <cstdint>
#include <vector>

#include "confusable/dataset.hpp"
#include "confusable/synthetic.hpp"
#include "confusable/trace.hpp"
#include "confusable/training.hpp"

namespace confusable::acceptance {

// 200 classes, 50 confusable pairs, 30 instances per class.
SyntheticSpec headline_spec(std::uint64_t seed);
TrainConfig headline_config(TrainingMode mode, std::uint64_t seed);

struct HeadlineRun {
  TrainingMode mode = TrainingMode::ConfusableLearning;
  double rho = 0.0;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double seconds = 0.0;
  std::vector<EpisodeTrace> traces;
};

struct HeadlineData {
  SyntheticSpec train_spec;
  Dataset train;
  Dataset test;
};

HeadlineData headline_data(std::uint64_t seed);
HeadlineRun run_headline(const HeadlineData& data, TrainConfig config);

}  // namespace confusable::acceptance
