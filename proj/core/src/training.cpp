#include "confusable/training.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "confusable/errors.hpp"
#include "confusable/gradient.hpp"

namespace confusable {
namespace {

constexpr std::array<std::string_view, 4> kModeNames = {"confusable", "confusable_count",
                                                        "traditional", "uniform"};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

ConfusionMatrix uniform_sampling_matrix(std::size_t k) { return ConfusionMatrix::uniform(k); }

void write_optional(std::ostream& out, const std::optional<double>& value) {
  if (value) out << format_double(*value);
}

// M estimator steps (one full recomputation in TraditionalCM mode) with the
// current parameters.
void refresh_estimate(TrainState& state, const Dataset& train, const TrainConfig& config,
                      const EpisodeConfig& episode_cfg, Rng& rng) {
  const auto learner = make_learner(config.learner, state.params);
  auto& estimator = state.estimator;
  if (config.mode == TrainingMode::TraditionalCM) {
    estimator.estimate = traditional_confusion(train, *learner, episode_cfg.n_s, episode_cfg.n_q,
                                               rng, estimator.config.temperature);
    ++estimator.steps;
    return;
  }
  const auto source = config.mode == TrainingMode::ConfusableLearningCount
                          ? ConfusionSource::ArgmaxIndicator
                          : ConfusionSource::Probability;
  for (std::size_t m = 0; m < estimator.config.m_steps; ++m) {
    estimate_step(estimator, train, *learner, episode_cfg.n_s, episode_cfg.n_q, rng, source);
  }
}

}  // namespace

std::string_view to_string(TrainingMode mode) {
  return kModeNames[static_cast<std::size_t>(mode)];
}

std::span<const std::string_view> training_mode_names() { return kModeNames; }

TrainingMode parse_training_mode(std::string_view text) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == text) return static_cast<TrainingMode>(i);
  }
  std::string valid;
  for (auto name : kModeNames) valid += (valid.empty() ? "" : ", ") + std::string(name);
  throw ConfigError("unknown mode '" + std::string(text) + "' (valid modes: " + valid + ")");
}

void TrainConfig::validate(std::size_t k) const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (!(temperature > 0.0)) throw ConfigError("train: temperature must be positive");
  if (d_emb == 0) throw ConfigError("train: d_emb must be positive");
  estimator.validate(k);
  resolved_episode(k).validate(k);
}

EpisodeConfig TrainConfig::resolved_episode(std::size_t k) const {
  EpisodeConfig cfg = episode;
  if (cfg.n_tc == 0) {
    cfg.n_tc = std::min(k, EpisodeConfig::default_targets(estimator.n_te, cfg.n_d));
  }
  return cfg;
}

RandomStreams RandomStreams::from_seed(std::uint64_t seed) {
  return {make_stream(seed, "init"), make_stream(seed, "episode"), make_stream(seed, "cme"),
          make_stream(seed, "audit")};
}

TrainState TrainState::initial(const Dataset& train, const TrainConfig& config,
                               RandomStreams& streams) {
  const std::size_t k = train.num_classes();
  config.validate(k);
  std::vector<std::size_t> widths{train.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(config.d_emb);
  TrainState state;
  state.params = LearnerParams::random(widths, streams.init);
  state.optimizer = OptimizerState::for_params(config.optimizer, state.params);
  EstimatorConfig est = config.estimator;
  if (config.mode == TrainingMode::TraditionalCM) {
    est.rho = 0.0;
    est.n_te = k;
  }
  state.estimator = EstimatorState::initial(k, est);
  return state;
}

EpisodeOutcome run_episode(TrainState& state, const Dataset& train, const TrainConfig& config,
                           RandomStreams& streams) {
  const auto start = Clock::now();
  const std::size_t k = train.num_classes();
  const EpisodeConfig episode_cfg = config.resolved_episode(k);
  const std::size_t number = state.episode + 1;

  // The sampling matrix is the estimate left by the previous episode; E is not
  // touched again until after the parameter update.
  const bool baseline = config.mode == TrainingMode::UniformBaseline;
  const ConfusionMatrix uniform = baseline ? uniform_sampling_matrix(k) : ConfusionMatrix{};
  const ConfusionMatrix& sampling = baseline ? uniform : state.estimator.estimate;
  const auto tasks = build_confusion_tasks(train, sampling, episode_cfg, streams.episode);

  EpisodeOutcome outcome;
  try {
    const EpisodeGradient step = loss_gradient(state.params, train, tasks, config.learner,
                                               config.temperature);
    outcome.objective = step.objective;
    sgd_step(state.params, step.gradient, config.lr, state.optimizer);
  } catch (const NumericalError& e) {
    throw NumericalError("episode " + std::to_string(number) + ": " + e.what());
  }
  if (!std::isfinite(outcome.objective)) {
    throw NumericalError("episode " + std::to_string(number) + ": non-finite objective");
  }
  if (const std::size_t bad = state.params.first_non_finite_layer(); bad < state.params.num_layers()) {
    throw NumericalError("episode " + std::to_string(number) + ": non-finite parameters in layer " +
                         std::to_string(bad));
  }

  const auto cme_start = Clock::now();
  try {
    if (!baseline) refresh_estimate(state, train, config, episode_cfg, streams.cme);
  } catch (const NumericalError& e) {
    throw NumericalError("episode " + std::to_string(number) + ": " + e.what());
  }
  outcome.wall_ms_cme = elapsed_ms(cme_start);

  state.episode = number;
  outcome.trace.episode = number;
  outcome.trace.objective = outcome.objective;
  for (const auto& task : tasks) {
    outcome.trace.targets.push_back(task.target);
    outcome.trace.distractors.push_back(task.distractors);
  }
  outcome.wall_ms_episode = elapsed_ms(start);
  return outcome;
}

bool convergence_check(std::span<const double> val_accuracy, std::size_t patience, double min_delta) {
  if (patience == 0 || val_accuracy.size() <= patience) return false;
  const std::size_t split = val_accuracy.size() - patience;
  double best = val_accuracy[0];
  for (std::size_t i = 1; i < split; ++i) best = std::max(best, val_accuracy[i]);
  for (std::size_t i = split; i < val_accuracy.size(); ++i) {
    if (val_accuracy[i] > best + min_delta) return false;
  }
  return true;
}

TrainState run_training(const TrainingData& data, const TrainConfig& config,
                        const TrainingHooks& hooks) {
  if (!data.train) throw ConfigError("training needs a meta-training dataset");
  const Dataset& train = *data.train;
  RandomStreams streams = RandomStreams::from_seed(config.seed);
  TrainState state = TrainState::initial(train, config, streams);
  const std::size_t k = train.num_classes();
  const EpisodeConfig episode_cfg = config.resolved_episode(k);
  const std::uint64_t val_seed = derive_seed(config.seed, "eval.validation");
  const std::uint64_t test_seed = derive_seed(config.seed, "eval.test");

  std::vector<double> val_curve;
  for (std::size_t e = 0; e < config.episodes; ++e) {
    const EpisodeOutcome outcome = run_episode(state, train, config, streams);
    if (hooks.on_episode) hooks.on_episode(outcome.trace);

    MetricsRow row;
    row.episode = state.episode;
    row.mode = config.mode;
    row.train_objective = outcome.objective;
    row.wall_ms_episode = outcome.wall_ms_episode;
    row.wall_ms_cme = outcome.wall_ms_cme;

    const bool last = e + 1 == config.episodes;
    const bool evaluate = last || (config.eval_every > 0 && state.episode % config.eval_every == 0);
    bool stop = false;
    if (evaluate) {
      const auto learner = make_learner(config.learner, state.params);
      EvalOptions eval = config.eval;
      eval.temperature = config.temperature;
      if (data.validation) {
        row.val_accuracy = evaluate_all_way(*data.validation, *learner, eval, val_seed).accuracy;
        val_curve.push_back(*row.val_accuracy);
        stop = convergence_check(val_curve, config.patience, config.min_delta);
      }
      if (data.test) {
        row.test_accuracy = evaluate_all_way(*data.test, *learner, eval, test_seed).accuracy;
      }
      if (config.audit_cme && config.mode != TrainingMode::UniformBaseline) {
        const auto reference = traditional_confusion(train, *learner, episode_cfg.n_s,
                                                     episode_cfg.n_q, streams.audit,
                                                     state.estimator.config.temperature);
        row.cme_row_l1_error = mean_row_l1(state.estimator.estimate, reference);
      }
    }
    state.history.push_back(row);
    if (evaluate && hooks.on_evaluation) hooks.on_evaluation(state);
    if (stop) break;
  }
  return state;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "episode,mode,train_J,val_accuracy,test_accuracy,"
         "cme_row_l1_error_if_frozen_oracle_enabled,wall_ms_episode,wall_ms_cme\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << to_string(r.mode) << ',' << format_double(r.train_objective) << ',';
    write_optional(out, r.val_accuracy);
    out << ',';
    write_optional(out, r.test_accuracy);
    out << ',';
    write_optional(out, r.cme_row_l1_error);
    out << ',' << format_double(r.wall_ms_episode) << ',' << format_double(r.wall_ms_cme) << '\n';
  }
}

}  // namespace confusable
