#include "confusable/task_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {

std::size_t EpisodeConfig::default_targets(std::size_t n_te, std::size_t n_d) {
  return std::max<std::size_t>(1, (n_te * 2) / (n_d + 2));
}

void EpisodeConfig::validate(std::size_t k) const {
  if (n_s == 0 || n_q == 0 || n_d == 0 || n_tc == 0) {
    throw ConfigError("episode config: n_s, n_q, n_d and n_tc must all be >= 1");
  }
  if (k < 2 || n_d > k - 1) {
    throw ConfigError("episode config: n_d = " + std::to_string(n_d) + " exceeds K - 1 = " +
                      std::to_string(k == 0 ? 0 : k - 1));
  }
  if (n_tc > k) {
    throw ConfigError("episode config: n_tc = " + std::to_string(n_tc) + " exceeds K = " +
                      std::to_string(k));
  }
}

ClassDistribution distractor_probs(const ConfusionMatrix& c, std::size_t target) {
  const std::size_t k = c.k();
  if (k < 2) throw ConfigError("distractor sampling needs at least 2 classes");
  if (target >= k) throw InputError("target class " + std::to_string(target) + " out of range");
  ClassDistribution dist;
  dist.classes.reserve(k - 1);
  dist.probs.reserve(k - 1);
  double off_diagonal = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == target) continue;
    dist.classes.push_back(j);
    dist.probs.push_back(c(target, j));
    off_diagonal += c(target, j);
  }
  if (off_diagonal > 0.0) {
    for (double& p : dist.probs) p /= off_diagonal;
  } else {
    std::fill(dist.probs.begin(), dist.probs.end(), 1.0 / static_cast<double>(k - 1));
  }
  return dist;
}

std::vector<std::size_t> sample_distractors(const ClassDistribution& probs, std::size_t n_d,
                                            Rng& rng) {
  const std::size_t n = probs.classes.size();
  if (probs.probs.size() != n) throw InputError("class distribution size mismatch");
  if (n_d > n) {
    throw ConfigError("cannot draw " + std::to_string(n_d) + " distinct distractors from " +
                      std::to_string(n) + " classes");
  }
  std::vector<double> weights(probs.probs);
  double remaining = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("distractor weights must be >= 0");
    remaining += w;
  }

  std::vector<std::size_t> chosen;
  chosen.reserve(n_d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (chosen.size() < n_d && remaining > 0.0) {
    const double u = unit(rng) * remaining;
    double cumulative = 0.0;
    std::size_t pick = n;
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      cumulative += weights[i];
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    // Rounding can leave u just past the final cumulative sum.
    if (pick == n) pick = last_positive;
    if (pick == n) break;
    chosen.push_back(probs.classes[pick]);
    weights[pick] = 0.0;
    remaining = 0.0;
    for (double w : weights) remaining += w;
  }

  if (chosen.size() < n_d) {
    std::vector<std::size_t> leftovers;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] <= 0.0 &&
          std::find(chosen.begin(), chosen.end(), probs.classes[i]) == chosen.end()) {
        leftovers.push_back(probs.classes[i]);
      }
    }
    keep_random_subset(leftovers, n_d - chosen.size(), rng);
    chosen.insert(chosen.end(), leftovers.begin(), leftovers.end());
  }
  return chosen;
}

std::vector<EpisodeTask> build_confusion_tasks(const Dataset& dataset, const ConfusionMatrix& c,
                                               const EpisodeConfig& cfg, Rng& rng) {
  const std::size_t k = dataset.num_classes();
  if (c.k() != k) {
    throw InputError("confusion matrix has " + std::to_string(c.k()) + " classes, dataset has " +
                     std::to_string(k));
  }
  cfg.validate(k);

  std::vector<EpisodeTask> tasks;
  tasks.reserve(cfg.n_tc);
  for (std::size_t target : sample_indices(k, cfg.n_tc, rng)) {
    EpisodeTask task;
    task.target = target;
    task.distractors = sample_distractors(distractor_probs(c, target), cfg.n_d, rng);

    require_class_size(dataset, target, cfg.n_s + cfg.n_q);
    auto target_support = sample_instances(dataset, target, cfg.n_s, rng);
    task.query = sample_instances(dataset, target, cfg.n_q, rng, target_support);
    task.support.push_back({target, std::move(target_support)});
    for (std::size_t d : task.distractors) {
      require_class_size(dataset, d, cfg.n_s);
      task.support.push_back({d, sample_instances(dataset, d, cfg.n_s, rng)});
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

Matrix gather_instances(const Dataset& dataset, std::size_t cls,
                        std::span<const std::size_t> instances) {
  return gather_rows(dataset.class_instances(cls), instances);
}

SupportSet gather_support(const Dataset& dataset, std::span<const ClassInstances> support) {
  SupportSet set;
  set.class_ids.reserve(support.size());
  set.instances.reserve(support.size());
  for (const auto& group : support) {
    set.class_ids.push_back(group.class_id);
    set.instances.push_back(gather_instances(dataset, group.class_id, group.instances));
  }
  return set;
}

EpisodeLoss episode_loss(std::span<const EpisodeTask> tasks, const Dataset& dataset,
                         const MetaLearner& learner, double temperature) {
  EpisodeLoss loss;
  if (tasks.empty()) return loss;
  std::size_t total_queries = 0;
  for (const auto& task : tasks) total_queries += task.query.size();

  double sum = 0.0;
  for (const auto& task : tasks) {
    const SupportSet support = gather_support(dataset, task.support);
    const Matrix queries = gather_instances(dataset, task.target, task.query);
    const Matrix probs = learner.predict(support, queries, temperature);
    std::vector<PredictiveDistribution> per_query;
    per_query.reserve(probs.rows());
    for (std::size_t q = 0; q < probs.rows(); ++q) {
      const auto row = probs.row(q);
      // support[0] is the target.
      sum += std::log(std::max(row[0], kProbabilityFloor));
      per_query.emplace_back(std::vector<double>(row.begin(), row.end()));
    }
    loss.predictions.push_back(std::move(per_query));
  }
  loss.objective = sum / static_cast<double>(total_queries);
  return loss;
}

}  // namespace confusable
