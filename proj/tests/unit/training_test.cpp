#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "confusable/errors.hpp"
#include "confusable/gradient.hpp"
#include "confusable/synthetic.hpp"
#include "confusable/training.hpp"
#include "fixtures.hpp"

namespace confusable {
namespace {

Dataset small_train() {
  SyntheticSpec s;
  s.k = 12;
  s.pairs = 3;
  s.d_in = 6;
  s.sigma_within = 0.5;
  s.delta_pair = 1.0;
  s.delta_far = 5.0;
  s.n_per_class = 15;
  s.seed = 3;
  return generate_synthetic(s);
}

Dataset small_test() {
  SyntheticSpec s;
  s.k = 10;
  s.pairs = 2;
  s.d_in = 6;
  s.delta_pair = 1.0;
  s.delta_far = 5.0;
  s.n_per_class = 15;
  s.seed = 4;
  return generate_synthetic(s, Split::MetaTest);
}

TrainConfig small_config(TrainingMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.seed = 11;
  cfg.episodes = 30;
  cfg.hidden = {8};
  cfg.d_emb = 4;
  cfg.episode = {2, 3, 2, 0};
  cfg.estimator.n_te = 6;
  cfg.eval.n_s = 2;
  cfg.eval.n_q = 3;
  cfg.eval.episodes = 2;
  return cfg;
}

void expect_same_history(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].episode, b[i].episode);
    EXPECT_EQ(a[i].mode, b[i].mode);
    EXPECT_EQ(a[i].train_objective, b[i].train_objective);
    EXPECT_EQ(a[i].val_accuracy, b[i].val_accuracy);
    EXPECT_EQ(a[i].test_accuracy, b[i].test_accuracy);
    EXPECT_EQ(a[i].cme_row_l1_error, b[i].cme_row_l1_error);
  }
}

TEST(TrainingMode, ParseListsValidModes) {
  EXPECT_EQ(parse_training_mode("confusable_count"), TrainingMode::ConfusableLearningCount);
  EXPECT_EQ(to_string(TrainingMode::TraditionalCM), "traditional");
  try {
    parse_training_mode("hard");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    for (auto name : training_mode_names()) EXPECT_NE(what.find(name), std::string::npos);
  }
}

TEST(TrainConfig, DerivesTargetCountAndValidates) {
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  EXPECT_EQ(cfg.resolved_episode(12).n_tc, 3u);  // floor(2 * 6 / 4)
  cfg.lr = 0.0;
  EXPECT_THROW(cfg.validate(12), ConfigError);
  cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.episode.n_d = 12;
  EXPECT_THROW(cfg.validate(12), ConfigError);
}

TEST(RunTraining, ZeroEpisodesReturnsInitialState) {
  const auto train = small_train();
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.episodes = 0;
  const auto state = run_training({&train}, cfg);
  EXPECT_TRUE(state.history.empty());
  EXPECT_EQ(state.episode, 0u);
  EXPECT_EQ(state.estimator.estimate, ConfusionMatrix::uniform(12));
  auto streams = RandomStreams::from_seed(cfg.seed);
  EXPECT_EQ(state.params, TrainState::initial(train, cfg, streams).params);
}

TEST(RunTraining, IdenticalSeedsGiveIdenticalHistories) {
  const auto train = small_train();
  const auto test = small_test();
  for (auto mode : {TrainingMode::ConfusableLearning, TrainingMode::ConfusableLearningCount,
                    TrainingMode::TraditionalCM, TrainingMode::UniformBaseline}) {
    auto cfg = small_config(mode);
    cfg.eval_every = 10;
    cfg.audit_cme = true;
    const auto a = run_training({&train, &test, &test}, cfg);
    const auto b = run_training({&train, &test, &test}, cfg);
    expect_same_history(a.history, b.history);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.estimator.estimate, b.estimator.estimate);
  }
}

TEST(RunTraining, EvaluatesOnScheduleAndAtTheEnd) {
  const auto train = small_train();
  const auto test = small_test();
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.episodes = 25;
  cfg.eval_every = 10;
  cfg.audit_cme = true;
  const auto state = run_training({&train, &test, &test}, cfg);
  ASSERT_EQ(state.history.size(), 25u);
  for (const auto& row : state.history) {
    const bool due = row.episode % 10 == 0 || row.episode == 25;
    EXPECT_EQ(row.val_accuracy.has_value(), due) << row.episode;
    EXPECT_EQ(row.test_accuracy.has_value(), due);
    EXPECT_EQ(row.cme_row_l1_error.has_value(), due);
    if (row.cme_row_l1_error) {
      EXPECT_GE(*row.cme_row_l1_error, 0.0);
      EXPECT_LE(*row.cme_row_l1_error, 2.0);
    }
  }
}

TEST(RunTraining, EvaluationHookSeesEachEvaluation) {
  const auto train = small_train();
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.eval_every = 7;
  std::vector<std::size_t> seen;
  std::size_t traces = 0;
  TrainingHooks hooks;
  hooks.on_episode = [&](const EpisodeTrace&) { ++traces; };
  hooks.on_evaluation = [&](const TrainState& s) { seen.push_back(s.episode); };
  run_training({&train}, cfg, hooks);
  EXPECT_EQ(seen, (std::vector<std::size_t>{7, 14, 21, 28, 30}));
  EXPECT_EQ(traces, 30u);
}

TEST(RunTraining, PatienceStopsEarly) {
  const auto train = small_train();
  const auto test = small_test();
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.episodes = 100;
  cfg.eval_every = 5;
  cfg.patience = 2;
  cfg.min_delta = 1.0;  // no evaluation can improve by a full unit
  const auto state = run_training({&train, &test}, cfg);
  EXPECT_EQ(state.episode, 15u);
}

class EpisodeMechanics : public ::testing::Test {
 protected:
  Dataset train = small_train();
};

// The tasks of episode t come from E as left by episode t-1, and the estimator
// refresh runs after the parameter update.
TEST_F(EpisodeMechanics, SnapshotThenUpdateThenEstimate) {
  for (auto mode : {TrainingMode::ConfusableLearning, TrainingMode::ConfusableLearningCount}) {
    const auto cfg = small_config(mode);
    auto streams = RandomStreams::from_seed(cfg.seed);
    auto state = TrainState::initial(train, cfg, streams);
    for (int warm = 0; warm < 5; ++warm) run_episode(state, train, cfg, streams);

    const TrainState before = state;
    RandomStreams replay = streams;
    const auto outcome = run_episode(state, train, cfg, streams);

    const auto episode_cfg = cfg.resolved_episode(train.num_classes());
    const auto tasks = build_confusion_tasks(train, before.estimator.estimate, episode_cfg, replay.episode);
    ASSERT_EQ(outcome.trace.targets.size(), tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      EXPECT_EQ(outcome.trace.targets[t], tasks[t].target);
      EXPECT_EQ(outcome.trace.distractors[t], tasks[t].distractors);
    }

    LearnerParams params = before.params;
    OptimizerState opt = before.optimizer;
    const auto step = loss_gradient(params, train, tasks, cfg.learner, cfg.temperature);
    EXPECT_EQ(outcome.objective, step.objective);
    sgd_step(params, step.gradient, cfg.lr, opt);
    EXPECT_EQ(state.params, params);

    EstimatorState estimator = before.estimator;
    const auto learner = make_learner(cfg.learner, params);
    const auto source = mode == TrainingMode::ConfusableLearningCount ? ConfusionSource::ArgmaxIndicator
                                                                      : ConfusionSource::Probability;
    estimate_step(estimator, train, *learner, episode_cfg.n_s, episode_cfg.n_q, replay.cme, source);
    EXPECT_EQ(state.estimator.estimate, estimator.estimate);
    EXPECT_EQ(state.episode, before.episode + 1);
  }
}

TEST_F(EpisodeMechanics, CountModeDiffersFromSoftMode) {
  auto soft_cfg = small_config(TrainingMode::ConfusableLearning);
  auto count_cfg = small_config(TrainingMode::ConfusableLearningCount);
  auto s1 = RandomStreams::from_seed(1);
  auto s2 = RandomStreams::from_seed(1);
  auto a = TrainState::initial(train, soft_cfg, s1);
  auto b = TrainState::initial(train, count_cfg, s2);
  run_episode(a, train, soft_cfg, s1);
  run_episode(b, train, count_cfg, s2);
  EXPECT_NE(a.estimator.estimate, b.estimator.estimate);
  // Indicator observations put whole units of mass on argmax classes.
  bool has_zero = false;
  for (double v : b.estimator.estimate.entries().values()) has_zero |= v < 1.0 / 12 - 1e-12;
  EXPECT_TRUE(has_zero);
}

TEST_F(EpisodeMechanics, UniformBaselineLeavesEstimatorUntouched) {
  const auto cfg = small_config(TrainingMode::UniformBaseline);
  auto streams = RandomStreams::from_seed(2);
  auto state = TrainState::initial(train, cfg, streams);
  const Rng cme_before = streams.cme;
  for (int e = 0; e < 10; ++e) run_episode(state, train, cfg, streams);
  EXPECT_EQ(state.estimator.estimate, ConfusionMatrix::uniform(12));
  EXPECT_EQ(state.estimator.steps, 0u);
  EXPECT_EQ(streams.cme, cme_before);
}

TEST_F(EpisodeMechanics, TraditionalModeRecomputesFullMatrix) {
  const auto cfg = small_config(TrainingMode::TraditionalCM);
  auto streams = RandomStreams::from_seed(5);
  auto state = TrainState::initial(train, cfg, streams);
  EXPECT_EQ(state.estimator.config.rho, 0.0);
  EXPECT_EQ(state.estimator.config.n_te, 12u);
  run_episode(state, train, cfg, streams);
  RandomStreams replay = streams;
  auto copy = state;
  run_episode(state, train, cfg, streams);
  const auto learner = make_learner(cfg.learner, state.params);
  // Replaying the episode's cme stream reproduces the stored matrix.
  const auto episode_cfg = cfg.resolved_episode(12);
  const auto expected = traditional_confusion(train, *learner, episode_cfg.n_s, episode_cfg.n_q, replay.cme);
  EXPECT_EQ(state.estimator.estimate, expected);
  EXPECT_NE(copy.estimator.estimate, expected);
}

TEST_F(EpisodeMechanics, TraditionalEqualsFullWindowRhoZero) {
  auto trad = small_config(TrainingMode::TraditionalCM);
  auto special = small_config(TrainingMode::ConfusableLearning);
  special.estimator.rho = 0.0;
  special.estimator.n_te = 12;
  trad.estimator.n_te = 12;  // keeps the derived target count equal
  const auto a = run_training({&train}, trad);
  const auto b = run_training({&train}, special);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_objective, b.history[i].train_objective);
  }
  for (std::size_t i = 0; i < 144; ++i) {
    EXPECT_NEAR(a.estimator.estimate.entries().values()[i], b.estimator.estimate.entries().values()[i], 1e-9);
  }
}

TEST_F(EpisodeMechanics, EstimatorRowStochasticAfterEveryEpisode) {
  for (auto mode : {TrainingMode::ConfusableLearning, TrainingMode::ConfusableLearningCount,
                    TrainingMode::TraditionalCM}) {
    const auto cfg = small_config(mode);
    auto streams = RandomStreams::from_seed(9);
    auto state = TrainState::initial(train, cfg, streams);
    for (int e = 0; e < 40; ++e) {
      run_episode(state, train, cfg, streams);
      for (std::size_t i = 0; i < 12; ++i) ASSERT_NEAR(state.estimator.estimate.row_sum(i), 1.0, 1e-6);
    }
  }
}

// With rho = 1 the estimate never moves, so distractors are uniform over the
// other classes, as in the baseline.
TEST_F(EpisodeMechanics, RhoOneSamplesLikeTheBaseline) {
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.estimator.rho = 1.0;
  cfg.episode.n_d = 1;
  std::vector<std::vector<double>> counts(12, std::vector<double>(12, 0.0));
  std::vector<double> targets(12, 0.0);
  TrainingHooks hooks;
  hooks.on_episode = [&](const EpisodeTrace& t) {
    for (std::size_t i = 0; i < t.targets.size(); ++i) {
      targets[t.targets[i]] += 1;
      counts[t.targets[i]][t.distractors[i][0]] += 1;
    }
  };
  cfg.episodes = 1500;
  cfg.lr = 1e-4;
  const auto state = run_training({&train}, cfg, hooks);
  EXPECT_EQ(state.estimator.estimate, ConfusionMatrix::uniform(12));
  EXPECT_GT(testing::chi_square_p_value(targets, std::vector<double>(12, 1.0 / 12)), 0.001);
  std::vector<double> pooled(11, 0.0);
  for (std::size_t t = 0; t < 12; ++t) {
    // Pool by offset from the target so each cell has enough mass.
    for (std::size_t d = 0; d < 12; ++d) {
      if (d != t) pooled[(d + 12 - t) % 12 - 1] += counts[t][d];
    }
  }
  EXPECT_GT(testing::chi_square_p_value(pooled, std::vector<double>(11, 1.0 / 11)), 0.001);
}

TEST_F(EpisodeMechanics, DivergenceReportsEpisodeNumber) {
  auto cfg = small_config(TrainingMode::ConfusableLearning);
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.lr = 1e300;
  try {
    run_training({&train}, cfg);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("episode "), std::string::npos) << e.what();
  }
}

TEST(ConvergenceCheck, Examples) {
  const std::vector<double> improving{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_FALSE(convergence_check(improving, 2, 0.005));
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  EXPECT_TRUE(convergence_check(flat, 2, 0.0));
  const std::vector<double> stalled{0.5, 0.51, 0.51, 0.51};
  EXPECT_TRUE(convergence_check(stalled, 2, 0.005));
  EXPECT_FALSE(convergence_check(stalled, 3, 0.005));
  EXPECT_FALSE(convergence_check(flat, 0, 0.0));
  EXPECT_FALSE(convergence_check(std::vector<double>{0.5, 0.5}, 2, 0.0));
}

TEST(MetricsCsv, SameSchemaForEveryMode) {
  const auto train = small_train();
  std::string first_header;
  for (auto mode : {TrainingMode::ConfusableLearning, TrainingMode::UniformBaseline}) {
    auto cfg = small_config(mode);
    cfg.episodes = 3;
    const auto state = run_training({&train}, cfg);
    std::ostringstream out;
    write_metrics_csv(out, state.history);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header,
              "episode,mode,train_J,val_accuracy,test_accuracy,"
              "cme_row_l1_error_if_frozen_oracle_enabled,wall_ms_episode,wall_ms_cme");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
      ++lines;
    }
    EXPECT_EQ(lines, 3);
  }
}

}  // namespace
}  // namespace confusable
