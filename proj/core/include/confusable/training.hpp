#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "confusable/cme.hpp"
#include "confusable/dataset.hpp"
#include "confusable/embedding.hpp"
#include "confusable/evaluation.hpp"
#include "confusable/learners.hpp"
#include "confusable/optimizer.hpp"
#include "confusable/rng.hpp"
#include "confusable/task_sampler.hpp"
#include "confusable/trace.hpp"

namespace confusable {

enum class TrainingMode {
  ConfusableLearning,       // soft confusion, incremental estimator
  ConfusableLearningCount,  // argmax-indicator confusion, incremental estimator
  TraditionalCM,            // full K-way soft confusion recomputed each episode
  UniformBaseline,          // distractors uniform, estimator unused
};

std::string_view to_string(TrainingMode mode);
// Throws ConfigError listing the valid names.
TrainingMode parse_training_mode(std::string_view text);
std::span<const std::string_view> training_mode_names();

struct TrainConfig {
  std::size_t episodes = 1000;
  EpisodeConfig episode;
  EstimatorConfig estimator;
  LearnerKind learner = LearnerKind::Prototypical;
  double temperature = 1.0;  // learner softmax temperature for the episode loss
  double lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  TrainingMode mode = TrainingMode::ConfusableLearning;
  std::size_t eval_every = 0;  // 0 evaluates only after the last episode
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64};
  std::size_t d_emb = 32;
  EvalOptions eval;
  std::size_t patience = 0;  // 0 disables early stopping
  double min_delta = 0.0;
  bool audit_cme = false;  // log mean row L1 between E and a K-way recomputation

  // Throws ConfigError.
  void validate(std::size_t k) const;
  // n_tc filled from the estimator window when left at 0.
  EpisodeConfig resolved_episode(std::size_t k) const;
};

struct MetricsRow {
  std::size_t episode = 0;
  TrainingMode mode = TrainingMode::ConfusableLearning;
  double train_objective = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> test_accuracy;
  std::optional<double> cme_row_l1_error;
  double wall_ms_episode = 0.0;
  double wall_ms_cme = 0.0;
};

// Independent random streams of one run.
struct RandomStreams {
  Rng init;
  Rng episode;
  Rng cme;
  Rng audit;

  static RandomStreams from_seed(std::uint64_t seed);
};

struct TrainState {
  LearnerParams params;
  OptimizerState optimizer;
  EstimatorState estimator;
  std::size_t episode = 0;
  std::vector<MetricsRow> history;

  static TrainState initial(const Dataset& train, const TrainConfig& config, RandomStreams& streams);
};

struct EpisodeOutcome {
  double objective = 0.0;
  EpisodeTrace trace;
  double wall_ms_episode = 0.0;
  double wall_ms_cme = 0.0;
};

// One training episode: sample tasks from the current estimate (uniformly in
// baseline mode), take a gradient step on -J, then refresh the estimate with
// the updated parameters. Throws NumericalError naming the episode when the
// parameters or gradient stop being finite.
EpisodeOutcome run_episode(TrainState& state, const Dataset& train, const TrainConfig& config,
                           RandomStreams& streams);

struct TrainingData {
  const Dataset* train = nullptr;
  const Dataset* validation = nullptr;
  const Dataset* test = nullptr;
};

struct TrainingHooks {
  std::function<void(const EpisodeTrace&)> on_episode;
  // Called after each evaluation with the state at that point.
  std::function<void(const TrainState&)> on_evaluation;
};

// Runs episodes until the cap, or until validation accuracy stalls when
// patience is set. Evaluates every eval_every episodes and after the last one.
TrainState run_training(const TrainingData& data, const TrainConfig& config,
                        const TrainingHooks& hooks = {});

// True once the last `patience` validation accuracies all fail to beat the
// best earlier value by more than min_delta.
bool convergence_check(std::span<const double> val_accuracy, std::size_t patience, double min_delta);

// Columns: episode,mode,train_J,val_accuracy,test_accuracy,
// cme_row_l1_error_if_frozen_oracle_enabled,wall_ms_episode,wall_ms_cme.
// Missing values are empty cells.
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

}  // namespace confusable
