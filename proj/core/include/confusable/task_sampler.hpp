#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confusable/confusion_matrix.hpp"
#include "confusable/dataset.hpp"
#include "confusable/learners.hpp"
#include "confusable/rng.hpp"

namespace confusable {

struct EpisodeConfig {
  std::size_t n_s = 5;   // support instances per class
  std::size_t n_q = 5;   // query instances per target
  std::size_t n_d = 5;   // distractors per target
  std::size_t n_tc = 0;  // targets per episode; 0 derives it from the CME window

  // floor(2 * n_te / (n_d + 2)), at least 1.
  static std::size_t default_targets(std::size_t n_te, std::size_t n_d);

  // Throws ConfigError unless every count is >= 1, n_d <= K - 1 and n_tc <= K.
  void validate(std::size_t k) const;
};

// Probabilities over a subset of classes.
struct ClassDistribution {
  std::vector<std::size_t> classes;
  std::vector<double> probs;
};

struct ClassInstances {
  std::size_t class_id = 0;
  std::vector<std::size_t> instances;

  bool operator==(const ClassInstances&) const = default;
};

// One target class with its distractors. support[0] holds the target, then
// the distractors in sampling order; query holds target instances disjoint
// from the target's support.
struct EpisodeTask {
  std::size_t target = 0;
  std::vector<std::size_t> distractors;
  std::vector<ClassInstances> support;
  std::vector<std::size_t> query;

  bool operator==(const EpisodeTask&) const = default;
};

// Confusion row of `target` renormalized over the other K - 1 classes.
// Uniform when the row has no off-diagonal mass. Throws ConfigError when K < 2.
ClassDistribution distractor_probs(const ConfusionMatrix& c, std::size_t target);

// n_d distinct classes, drawn one at a time proportionally to the remaining
// probability mass. Once positive-probability classes run out, the rest come
// uniformly from the zero-probability ones. Throws ConfigError when n_d
// exceeds the number of classes.
std::vector<std::size_t> sample_distractors(const ClassDistribution& probs, std::size_t n_d,
                                            Rng& rng);

// Samples cfg.n_tc distinct targets uniformly, then per target its
// distractors and instances. Throws DatasetError naming any class too small.
std::vector<EpisodeTask> build_confusion_tasks(const Dataset& dataset, const ConfusionMatrix& c,
                                               const EpisodeConfig& cfg, Rng& rng);

SupportSet gather_support(const Dataset& dataset, std::span<const ClassInstances> support);
Matrix gather_instances(const Dataset& dataset, std::size_t cls,
                        std::span<const std::size_t> instances);

// Log-probabilities below this floor are clamped.
inline constexpr double kProbabilityFloor = 1e-12;

struct EpisodeLoss {
  // J = mean over tasks and queries of log P(target | query); training
  // maximizes it.
  double objective = 0.0;
  // predictions[t][q] is over tasks[t].support's classes, target first.
  std::vector<std::vector<PredictiveDistribution>> predictions;
};

EpisodeLoss episode_loss(std::span<const EpisodeTask> tasks, const Dataset& dataset,
                         const MetaLearner& learner, double temperature = 1.0);

}  // namespace confusable
