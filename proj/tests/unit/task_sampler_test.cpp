#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "confusable/errors.hpp"
#include "confusable/task_sampler.hpp"
#include "fixtures.hpp"

namespace confusable {
namespace {

using testing::chi_square_p_value;
using testing::class_id_dataset;

ConfusionMatrix soft(Matrix m) { return ConfusionMatrix(std::move(m), ConfusionKind::Soft); }

ConfusionMatrix with_row(std::size_t k, std::size_t row, std::vector<double> values) {
  Matrix m(k, k, 1.0 / static_cast<double>(k));
  m.set_row(row, values);
  return soft(std::move(m));
}

ClassDistribution dist(std::vector<double> probs) {
  ClassDistribution d;
  for (std::size_t i = 0; i < probs.size(); ++i) d.classes.push_back(i);
  d.probs = std::move(probs);
  return d;
}

TEST(EpisodeConfig, DefaultTargetCount) {
  // N_T^e = 70 with N_D = 5 gives 20 targets.
  EXPECT_EQ(EpisodeConfig::default_targets(70, 5), 20u);
  EXPECT_EQ(EpisodeConfig::default_targets(40, 1), 26u);
  EXPECT_EQ(EpisodeConfig::default_targets(8, 5), 2u);
  EXPECT_EQ(EpisodeConfig::default_targets(2, 20), 1u);
}

TEST(EpisodeConfig, Validation) {
  EpisodeConfig cfg;
  cfg.n_tc = 3;
  EXPECT_NO_THROW(cfg.validate(6));
  cfg.n_d = 6;
  EXPECT_THROW(cfg.validate(6), ConfigError);
  cfg.n_d = 2;
  cfg.n_tc = 7;
  EXPECT_THROW(cfg.validate(6), ConfigError);
  cfg.n_tc = 2;
  cfg.n_q = 0;
  EXPECT_THROW(cfg.validate(6), ConfigError);
}

TEST(DistractorProbs, DropsDiagonalAndRenormalizes) {
  const auto d = distractor_probs(soft(Matrix(3, 3, std::vector<double>{0.8, 0.1, 0.1, 0, 1, 0, 0, 0, 1})), 0);
  EXPECT_EQ(d.classes, (std::vector<std::size_t>{1, 2}));
  EXPECT_NEAR(d.probs[0], 0.5, 1e-15);
  EXPECT_NEAR(d.probs[1], 0.5, 1e-15);
}

TEST(DistractorProbs, UniformMatrixGivesUniformOverOthers) {
  const auto d = distractor_probs(ConfusionMatrix::uniform(7), 4);
  EXPECT_EQ(d.classes, (std::vector<std::size_t>{0, 1, 2, 3, 5, 6}));
  for (double p : d.probs) EXPECT_NEAR(p, 1.0 / 6.0, 1e-15);
}

TEST(DistractorProbs, SingleConfusableClass) {
  const auto d = distractor_probs(with_row(4, 0, {0.5, 0.5, 0, 0}), 0);
  EXPECT_EQ(d.probs, (std::vector<double>{1, 0, 0}));
}

TEST(DistractorProbs, NoOffDiagonalMassFallsBackToUniform) {
  const auto d = distractor_probs(with_row(4, 2, {0, 0, 1, 0}), 2);
  for (double p : d.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(DistractorProbs, SingleClassIsConfigError) {
  EXPECT_THROW(distractor_probs(ConfusionMatrix::uniform(1), 0), ConfigError);
}

TEST(DistractorProbsProperty, MonotoneInfluence) {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 3 + trial % 10;
    Matrix m = testing::random_stochastic(k, rng, 0.3);
    const std::size_t row = rng() % k;
    std::size_t j = rng() % k;
    if (j == row) j = (j + 1) % k;
    const double before = distractor_probs(soft(m), row).probs[j < row ? j : j - 1];
    m(row, j) += u(rng);
    double total = 0.0;
    for (double v : m.row(row)) total += v;
    for (double& v : m.row(row)) v /= total;
    const double after = distractor_probs(soft(m), row).probs[j < row ? j : j - 1];
    ASSERT_GE(after, before - 1e-15);
  }
}

TEST(SampleDistractors, OneHotAlwaysPicksThatClass) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_distractors(dist({0, 0, 0, 1, 0}), 1, rng), (std::vector<std::size_t>{3}));
  }
}

TEST(SampleDistractors, ExhaustionGivesPermutation) {
  Rng rng(2);
  auto out = sample_distractors(dist(std::vector<double>(10, 0.1)), 10, rng);
  std::sort(out.begin(), out.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(out[i], i);
}

TEST(SampleDistractors, TooManyIsConfigError) {
  Rng rng(2);
  EXPECT_THROW(sample_distractors(dist({0.5, 0.5}), 3, rng), ConfigError);
}

TEST(SampleDistractors, PositiveClassesComeFirstThenUniformFallback) {
  Rng rng(3);
  std::vector<double> fallback(6, 0.0);
  const int draws = 20000;
  for (int n = 0; n < draws; ++n) {
    const auto out = sample_distractors(dist({0, 0.3, 0, 0.7, 0, 0}), 4, rng);
    ASSERT_EQ(out.size(), 4u);
    ASSERT_EQ(std::set<std::size_t>({out[0], out[1]}), (std::set<std::size_t>{1, 3}));
    ASSERT_EQ(std::set<std::size_t>(out.begin(), out.end()).size(), 4u);
    fallback[out[2]] += 1;
    fallback[out[3]] += 1;
  }
  EXPECT_GT(chi_square_p_value(fallback, {0.25, 0, 0.25, 0, 0.25, 0.25}), 0.01);
}

TEST(SampleDistractors, FirstDrawFrequenciesPassChiSquare) {
  Rng rng(2718);
  std::vector<double> counts(3, 0.0);
  for (int n = 0; n < 100000; ++n) counts[sample_distractors(dist({0.7, 0.2, 0.1}), 1, rng)[0]] += 1;
  EXPECT_GT(chi_square_p_value(counts, {0.7, 0.2, 0.1}), 0.01);
}

TEST(SampleDistractors, SecondDrawFollowsRenormalizedRemainder) {
  // P(second = j) = sum_i p_i * p_j / (1 - p_i) for i != j.
  const std::vector<double> p{0.5, 0.3, 0.2};
  std::vector<double> expect(3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) expect[j] += p[i] * p[j] / (1.0 - p[i]);
    }
  }
  Rng rng(31);
  std::vector<double> counts(3, 0.0);
  for (int n = 0; n < 60000; ++n) counts[sample_distractors(dist(p), 2, rng)[1]] += 1;
  EXPECT_GT(chi_square_p_value(counts, expect), 0.01);
}

TEST(BuildConfusionTasks, ExhaustiveTargets) {
  const auto ds = class_id_dataset(3, 6);
  Rng rng(4);
  EpisodeConfig cfg{2, 2, 1, 3};
  const auto tasks = build_confusion_tasks(ds, ConfusionMatrix::uniform(3), cfg, rng);
  ASSERT_EQ(tasks.size(), 3u);
  std::set<std::size_t> targets;
  for (const auto& t : tasks) targets.insert(t.target);
  EXPECT_EQ(targets, (std::set<std::size_t>{0, 1, 2}));
}

TEST(BuildConfusionTasks, SmallClassIsNamedWithRequiredCount) {
  std::vector<Matrix> classes{Matrix(6, 2), Matrix(3, 2), Matrix(6, 2)};
  const Dataset ds(std::move(classes));
  Rng rng(4);
  EpisodeConfig cfg{2, 2, 2, 3};
  try {
    build_confusion_tasks(ds, ConfusionMatrix::uniform(3), cfg, rng);
    FAIL();
  } catch (const DatasetError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("class 1"), std::string::npos) << what;
    EXPECT_NE(what.find('4'), std::string::npos) << what;
  }
}

// Property: every task of 1000 seeded episodes satisfies the task invariants.
TEST(BuildConfusionTasksProperty, TaskInvariants) {
  const auto ds = class_id_dataset(15, 12);
  Rng rng(5);
  for (int episode = 0; episode < 1000; ++episode) {
    EpisodeConfig cfg{1 + episode % 4, 1 + episode % 3, 1 + episode % 6, 1 + episode % 9};
    const ConfusionMatrix c(testing::random_stochastic(15, rng, 0.5), ConfusionKind::Soft);
    const auto tasks = build_confusion_tasks(ds, c, cfg, rng);
    ASSERT_EQ(tasks.size(), cfg.n_tc);
    std::set<std::size_t> targets;
    for (const auto& t : tasks) {
      targets.insert(t.target);
      ASSERT_EQ(t.distractors.size(), cfg.n_d);
      std::set<std::size_t> classes(t.distractors.begin(), t.distractors.end());
      ASSERT_EQ(classes.size(), cfg.n_d);
      ASSERT_FALSE(classes.count(t.target));
      ASSERT_EQ(t.support.size(), cfg.n_d + 1);
      ASSERT_EQ(t.support[0].class_id, t.target);
      std::size_t support_total = 0;
      for (std::size_t s = 0; s < t.support.size(); ++s) {
        if (s > 0) ASSERT_EQ(t.support[s].class_id, t.distractors[s - 1]);
        ASSERT_EQ(std::set<std::size_t>(t.support[s].instances.begin(), t.support[s].instances.end()).size(),
                  cfg.n_s);
        support_total += t.support[s].instances.size();
      }
      ASSERT_EQ(support_total, cfg.n_s * (cfg.n_d + 1));
      ASSERT_EQ(t.query.size(), cfg.n_q);
      const std::set<std::size_t> query(t.query.begin(), t.query.end());
      ASSERT_EQ(query.size(), cfg.n_q);
      for (std::size_t i : t.support[0].instances) ASSERT_FALSE(query.count(i));
    }
    ASSERT_EQ(targets.size(), cfg.n_tc);
  }
}

TEST(BuildConfusionTasks, UniformMatrixGivesUniformDistractors) {
  constexpr std::size_t k = 8;
  const auto ds = class_id_dataset(k, 4);
  Rng rng(6);
  EpisodeConfig cfg{1, 1, 3, 1};
  std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));
  std::vector<double> target_counts(k, 0.0);
  for (int episode = 0; episode < 10000; ++episode) {
    const auto tasks = build_confusion_tasks(ds, ConfusionMatrix::uniform(k), cfg, rng);
    target_counts[tasks[0].target] += 1;
    for (std::size_t d : tasks[0].distractors) counts[tasks[0].target][d] += 1;
  }
  EXPECT_GT(chi_square_p_value(target_counts, std::vector<double>(k, 1.0 / k)), 0.001);
  for (std::size_t t = 0; t < k; ++t) {
    std::vector<double> expect(k, 1.0 / (k - 1));
    expect[t] = 0.0;
    EXPECT_GT(chi_square_p_value(counts[t], expect), 0.001) << "target " << t;
  }
}

TEST(BuildConfusionTasks, ConcentratedRowDominatesDistractors) {
  constexpr std::size_t k = 12;
  std::vector<double> row(k, 0.001);
  row[5] = 0.2;
  row[9] = 0.8 - 0.001 * (k - 2);
  const auto c = with_row(k, 5, row);
  const auto ds = class_id_dataset(k, 4);
  Rng rng(7);
  EpisodeConfig cfg{1, 1, 1, k};
  int hits = 0;
  const int episodes = 2000;
  for (int e = 0; e < episodes; ++e) {
    for (const auto& t : build_confusion_tasks(ds, c, cfg, rng)) {
      if (t.target == 5 && t.distractors[0] == 9) ++hits;
    }
  }
  EXPECT_GT(hits, 0.95 * episodes);
}

TEST(EpisodeLoss, PerfectLearnerGivesZero) {
  const auto ds = class_id_dataset(6, 8);
  Rng rng(8);
  const auto tasks = build_confusion_tasks(ds, ConfusionMatrix::uniform(6), {2, 3, 2, 4}, rng);
  EXPECT_EQ(episode_loss(tasks, ds, testing::PerfectLearner{}).objective, 0.0);
}

TEST(EpisodeLoss, UniformLearnerOverFiveClasses) {
  const auto ds = class_id_dataset(9, 8);
  Rng rng(8);
  const auto tasks = build_confusion_tasks(ds, ConfusionMatrix::uniform(9), {2, 3, 4, 3}, rng);
  const auto loss = episode_loss(tasks, ds, testing::UniformLearner{});
  EXPECT_NEAR(loss.objective, std::log(0.2), 1e-12);
  EXPECT_NEAR(loss.objective, -1.6094, 1e-4);
  ASSERT_EQ(loss.predictions.size(), 3u);
  EXPECT_EQ(loss.predictions[0].size(), 3u);
  EXPECT_EQ(loss.predictions[0][0].size(), 5u);
}

TEST(EpisodeLoss, TwoTaskArithmetic) {
  Matrix table(4, 4);
  table.set_row(0, std::vector<double>{0.5, 0.5, 0, 0});
  table.set_row(2, std::vector<double>{0, 0, 0.25, 0.75});
  const testing::TableLearner learner(table);
  const auto ds = class_id_dataset(4, 3);
  std::vector<EpisodeTask> tasks(2);
  tasks[0] = {0, {1}, {{0, {0}}, {1, {0}}}, {1}};
  tasks[1] = {2, {3}, {{2, {0}}, {3, {0}}}, {1}};
  const double j = episode_loss(tasks, ds, learner).objective;
  EXPECT_NEAR(j, (std::log(0.5) + std::log(0.25)) / 2.0, 1e-15);
  EXPECT_NEAR(j, -1.0397, 1e-4);
}

TEST(EpisodeLoss, FloorsVanishingProbability) {
  Matrix table(2, 2);
  table.set_row(0, std::vector<double>{0, 1});
  table.set_row(1, std::vector<double>{0, 1});
  const testing::TableLearner learner(table);
  const auto ds = class_id_dataset(2, 3);
  const std::vector<EpisodeTask> tasks{{0, {1}, {{0, {0}}, {1, {0}}}, {1}}};
  EXPECT_NEAR(episode_loss(tasks, ds, learner).objective, std::log(kProbabilityFloor), 1e-12);
}

TEST(EpisodeLossProperty, InvariantToTaskAndQueryOrder) {
  const auto ds = class_id_dataset(10, 10);
  Rng table_rng(9);
  const testing::TableLearner learner(testing::random_stochastic(10, table_rng));
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    auto tasks = build_confusion_tasks(ds, ConfusionMatrix::uniform(10), {2, 4, 3, 5}, rng);
    const double j = episode_loss(tasks, ds, learner).objective;
    std::shuffle(tasks.begin(), tasks.end(), rng);
    for (auto& t : tasks) std::shuffle(t.query.begin(), t.query.end(), rng);
    ASSERT_NEAR(episode_loss(tasks, ds, learner).objective, j, 1e-12);
  }
}

}  // namespace
}  // namespace confusable
