#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "confusable/confusion_matrix.hpp"
#include "confusable/dataset.hpp"
#include "confusable/learners.hpp"
#include "confusable/rng.hpp"

namespace confusable {

struct EstimatorConfig {
  double rho = 0.9;          // weight kept by the running estimate per update
  std::size_t n_te = 8;      // classes observed per step
  std::size_t m_steps = 1;   // estimator steps per training episode
  double temperature = 1.0;  // softmax temperature for estimator inference

  // Throws ConfigError.
  void validate(std::size_t k) const;
};

// How a query's prediction enters the observed matrix: its full distribution,
// or a one-hot indicator at its argmax (count-based ablation).
enum class ConfusionSource { Probability, ArgmaxIndicator };

// Running estimate E of the K x K soft confusion matrix. Starts uniform and is
// never reset during a run.
struct EstimatorState {
  ConfusionMatrix estimate;
  EstimatorConfig config;
  std::uint64_t steps = 0;

  static EstimatorState initial(std::size_t k, const EstimatorConfig& config);
};

// Confusion among a window of classes, observed from one support/query draw.
struct WindowObservation {
  std::vector<std::size_t> class_ids;  // distinct, ascending
  ConfusionMatrix e_prime;             // soft, class_ids.size() squared
};

// One joint support (n_s per class) and per-class queries (n_q per class,
// disjoint from that class's support) over a set of classes.
struct WindowDraw {
  std::vector<std::size_t> class_ids;
  SupportSet support;
  Matrix queries;
  std::vector<std::size_t> query_positions;  // window position of each query's class

  // Entries in the batch probability matrix inference produces.
  std::size_t footprint() const noexcept { return queries.rows() * class_ids.size(); }
};

// n_te distinct classes uniformly, sorted ascending. Selecting all K classes
// consumes no randomness.
std::vector<std::size_t> select_window_classes(std::size_t k, std::size_t n_te, Rng& rng);

// Draws instances class by class in the given order. Throws DatasetError
// naming the first class with fewer than n_s + n_q instances.
WindowDraw draw_window(const Dataset& dataset, std::vector<std::size_t> class_ids, std::size_t n_s,
                       std::size_t n_q, Rng& rng);

ConfusionMatrix window_confusion(const MetaLearner& learner, const WindowDraw& draw,
                                 double temperature, ConfusionSource source);

WindowObservation observe_window(const Dataset& dataset, const MetaLearner& learner,
                                 const EstimatorState& state, std::size_t n_s, std::size_t n_q,
                                 Rng& rng, ConfusionSource source = ConfusionSource::Probability);

// Blends the observation into the window rows of E:
//   E[v_i, v_j] <- rho * E[v_i, v_j] + (1 - rho) * E'[i, j] * Z_i,
// where Z_i is the window mass of row v_i before the update. Rows and columns
// outside the window are untouched, and each row keeps its sum.
void apply_update(EstimatorState& state, const WindowObservation& obs);

// observe_window followed by apply_update.
void estimate_step(EstimatorState& state, const Dataset& dataset, const MetaLearner& learner,
                   std::size_t n_s, std::size_t n_q, Rng& rng,
                   ConfusionSource source = ConfusionSource::Probability);

// Checkpoint: one `# rho=..,n_te=..,m_steps=..,temperature=..,steps=..` line,
// then the estimate in confusion matrix CSV form.
void write_estimator(std::ostream& out, const EstimatorState& state);
EstimatorState read_estimator(std::istream& in);

}  // namespace confusable
