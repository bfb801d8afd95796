#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "confusable/cme.hpp"
#include "confusable/confusion_matrix.hpp"
#include "confusable/dataset.hpp"
#include "confusable/learners.hpp"
#include "confusable/trace.hpp"

namespace confusable {

struct EvalOptions {
  std::size_t n_s = 5;
  std::size_t n_q = 5;
  std::size_t episodes = 10;
  std::size_t way = 0;  // 0 evaluates all classes
  double temperature = 1.0;
  std::size_t threads = 1;
};

struct EvalReport {
  std::size_t way = 0;
  std::size_t shot = 0;
  std::size_t episodes = 0;
  double accuracy = 0.0;
  double accuracy_stddev = 0.0;  // across episodes
  double mean_loss = 0.0;        // mean -log P(true class), floored
  std::vector<std::size_t> class_ids;
  std::vector<double> per_class_accuracy;  // parallel to class_ids
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Every episode conditions on a support set spanning all evaluated classes and
// scores n_q queries per class by argmax. When options.way < K, one subset of
// that size is drawn up front and used throughout. Episode e draws from its own
// stream of `seed`, so results do not depend on options.threads.
EvalReport evaluate_all_way(const Dataset& dataset, const MetaLearner& learner,
                            const EvalOptions& options, std::uint64_t seed);

// Soft confusion over all K classes from a single K-way draw.
ConfusionMatrix traditional_confusion(const Dataset& dataset, const MetaLearner& learner,
                                      std::size_t n_s, std::size_t n_q, Rng& rng,
                                      double temperature = 1.0,
                                      ConfusionSource source = ConfusionSource::Probability);

struct CmeBenchmarkConfig {
  std::size_t m_steps = 1;
  std::size_t n_te = 8;
};

struct CmeBenchmarkRow {
  std::string label;  // "traditional" or "cme"
  std::size_t m_steps = 0;
  std::size_t n_te = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double time_ratio = 1.0;  // median relative to the traditional refresh
  std::size_t footprint = 0;  // probability entries in the largest inference batch
  double footprint_ratio = 1.0;
};

struct CmeBenchmarkOptions {
  std::size_t repetitions = 20;
  std::size_t n_s = 5;
  std::size_t n_q = 5;
  double rho = 0.9;
  std::uint64_t seed = 0;
};

// Wall time of one confusion-matrix refresh: M estimator steps per config,
// against one traditional K-way computation (first row). Single-threaded.
std::vector<CmeBenchmarkRow> cme_benchmark(const Dataset& dataset, const MetaLearner& learner,
                                           std::span<const CmeBenchmarkConfig> configs,
                                           const CmeBenchmarkOptions& options);

void write_benchmark_csv(std::ostream& out, std::span<const CmeBenchmarkRow> rows);

// Times each class was drawn as a distractor over episodes in
// [first_episode, end_episode).
std::vector<std::size_t> attention_frequencies(std::span<const EpisodeTrace> traces, std::size_t k,
                                               std::size_t first_episode, std::size_t end_episode);
// Same, reading a JSON-lines trace log. Throws ParseError with a line number.
std::vector<std::size_t> attention_frequencies(std::istream& trace_log, std::size_t k,
                                               std::size_t first_episode, std::size_t end_episode);

// `class_id,count` rows.
void write_attention_csv(std::ostream& out, std::span<const std::size_t> counts);

}  // namespace confusable
