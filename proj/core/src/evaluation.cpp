#include "confusable/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "confusable/errors.hpp"
#include "confusable/parallel.hpp"
#include "confusable/task_sampler.hpp"

namespace confusable {
namespace {

struct EpisodeScore {
  std::vector<std::size_t> correct;  // per evaluated class
  double log_loss_sum = 0.0;
};

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {
      {"way", way},
      {"shot", shot},
      {"episodes", episodes},
      {"accuracy", accuracy},
      {"accuracy_stddev", accuracy_stddev},
      {"mean_loss", mean_loss},
      {"class_ids", class_ids},
      {"per_class_accuracy", per_class_accuracy},
      {"seed", seed},
  };
}

EvalReport evaluate_all_way(const Dataset& dataset, const MetaLearner& learner,
                            const EvalOptions& options, std::uint64_t seed) {
  const std::size_t k = dataset.num_classes();
  if (options.way > k) {
    throw ConfigError("evaluation way " + std::to_string(options.way) + " exceeds the " +
                      std::to_string(k) + " available classes");
  }
  if (options.episodes == 0 || options.n_s == 0 || options.n_q == 0) {
    throw ConfigError("evaluation needs episodes, n_s and n_q >= 1");
  }
  const std::size_t way = options.way == 0 ? k : options.way;
  if (way < 2) throw ConfigError("evaluation needs at least 2 classes");

  std::vector<std::size_t> classes(k);
  std::iota(classes.begin(), classes.end(), std::size_t{0});
  if (way < k) {
    Rng subset_rng = make_stream(seed, "eval.classes");
    classes = sample_indices(k, way, subset_rng);
    std::sort(classes.begin(), classes.end());
  }
  for (std::size_t c : classes) require_class_size(dataset, c, options.n_s + options.n_q);

  std::vector<EpisodeScore> scores(options.episodes);
  parallel_for(options.episodes, options.threads, [&](std::size_t e) {
    Rng rng = make_stream(seed, "eval.episode." + std::to_string(e));
    const WindowDraw draw = draw_window(dataset, classes, options.n_s, options.n_q, rng);
    const Matrix probs = learner.predict(draw.support, draw.queries, options.temperature);
    EpisodeScore& score = scores[e];
    score.correct.assign(way, 0);
    for (std::size_t q = 0; q < probs.rows(); ++q) {
      const auto row = probs.row(q);
      const std::size_t truth = draw.query_positions[q];
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == truth) ++score.correct[truth];
      score.log_loss_sum -= std::log(std::max(row[truth], kProbabilityFloor));
    }
  });

  EvalReport report;
  report.way = way;
  report.shot = options.n_s;
  report.episodes = options.episodes;
  report.seed = seed;
  report.class_ids = classes;
  report.per_class_accuracy.assign(way, 0.0);
  const double queries_per_episode = static_cast<double>(way * options.n_q);
  std::vector<double> episode_accuracy;
  double loss_sum = 0.0;
  for (const auto& score : scores) {
    const auto correct = std::accumulate(score.correct.begin(), score.correct.end(), std::size_t{0});
    episode_accuracy.push_back(static_cast<double>(correct) / queries_per_episode);
    loss_sum += score.log_loss_sum;
    for (std::size_t w = 0; w < way; ++w) {
      report.per_class_accuracy[w] += static_cast<double>(score.correct[w]);
    }
  }
  const double per_class_total = static_cast<double>(options.episodes * options.n_q);
  for (double& a : report.per_class_accuracy) a /= per_class_total;
  const double n = static_cast<double>(episode_accuracy.size());
  report.accuracy = std::accumulate(episode_accuracy.begin(), episode_accuracy.end(), 0.0) / n;
  double var = 0.0;
  for (double a : episode_accuracy) var += (a - report.accuracy) * (a - report.accuracy);
  report.accuracy_stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  report.mean_loss = loss_sum / (n * queries_per_episode);
  return report;
}

ConfusionMatrix traditional_confusion(const Dataset& dataset, const MetaLearner& learner,
                                      std::size_t n_s, std::size_t n_q, Rng& rng,
                                      double temperature, ConfusionSource source) {
  const std::size_t k = dataset.num_classes();
  auto classes = select_window_classes(k, k, rng);
  const WindowDraw draw = draw_window(dataset, std::move(classes), n_s, n_q, rng);
  return window_confusion(learner, draw, temperature, source);
}

std::vector<CmeBenchmarkRow> cme_benchmark(const Dataset& dataset, const MetaLearner& learner,
                                           std::span<const CmeBenchmarkConfig> configs,
                                           const CmeBenchmarkOptions& options) {
  using Clock = std::chrono::steady_clock;
  const std::size_t k = dataset.num_classes();
  if (options.repetitions == 0) throw ConfigError("benchmark needs at least one repetition");

  auto time_ms = [](auto&& fn) {
    const auto start = Clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  std::vector<CmeBenchmarkRow> rows;
  {
    Rng rng = make_stream(options.seed, "bench.traditional");
    traditional_confusion(dataset, learner, options.n_s, options.n_q, rng);  // warm-up
    std::vector<double> samples;
    for (std::size_t r = 0; r < options.repetitions; ++r) {
      samples.push_back(time_ms([&] {
        traditional_confusion(dataset, learner, options.n_s, options.n_q, rng);
      }));
    }
    CmeBenchmarkRow row;
    row.label = "traditional";
    row.m_steps = 1;
    row.n_te = k;
    row.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    row.median_ms = median(samples);
    row.footprint = k * options.n_q * k;
    rows.push_back(row);
  }
  const double base_ms = rows.front().median_ms;
  const double base_footprint = static_cast<double>(rows.front().footprint);

  for (const auto& config : configs) {
    EstimatorConfig est{options.rho, config.n_te, config.m_steps, 1.0};
    EstimatorState state = EstimatorState::initial(k, est);
    Rng rng = make_stream(options.seed, "bench.cme." + std::to_string(config.m_steps) + "." +
                                            std::to_string(config.n_te));
    estimate_step(state, dataset, learner, options.n_s, options.n_q, rng);  // warm-up
    std::vector<double> samples;
    for (std::size_t r = 0; r < options.repetitions; ++r) {
      samples.push_back(time_ms([&] {
        for (std::size_t m = 0; m < config.m_steps; ++m) {
          estimate_step(state, dataset, learner, options.n_s, options.n_q, rng);
        }
      }));
    }
    CmeBenchmarkRow row;
    row.label = "cme";
    row.m_steps = config.m_steps;
    row.n_te = config.n_te;
    row.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    row.median_ms = median(samples);
    row.time_ratio = base_ms > 0.0 ? row.median_ms / base_ms : 0.0;
    row.footprint = config.n_te * options.n_q * config.n_te;
    row.footprint_ratio = static_cast<double>(row.footprint) / base_footprint;
    rows.push_back(row);
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, std::span<const CmeBenchmarkRow> rows) {
  out << "label,m_steps,n_te,mean_ms,median_ms,time_ratio,footprint,footprint_ratio\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.m_steps << ',' << r.n_te << ',' << format_double(r.mean_ms) << ','
        << format_double(r.median_ms) << ',' << format_double(r.time_ratio) << ',' << r.footprint
        << ',' << format_double(r.footprint_ratio) << '\n';
  }
}

std::vector<std::size_t> attention_frequencies(std::span<const EpisodeTrace> traces, std::size_t k,
                                               std::size_t first_episode, std::size_t end_episode) {
  std::vector<std::size_t> counts(k, 0);
  for (const auto& trace : traces) {
    if (trace.episode < first_episode || trace.episode >= end_episode) continue;
    for (const auto& group : trace.distractors) {
      for (std::size_t c : group) {
        if (c >= k) throw InputError("trace names class " + std::to_string(c) + " beyond K");
        ++counts[c];
      }
    }
  }
  return counts;
}

std::vector<std::size_t> attention_frequencies(std::istream& trace_log, std::size_t k,
                                               std::size_t first_episode, std::size_t end_episode) {
  std::vector<std::size_t> counts(k, 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(trace_log, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream one(line);
    std::vector<EpisodeTrace> parsed;
    try {
      parsed = read_trace(one);
    } catch (const ParseError& e) {
      throw ParseError(e.message(), line_no);
    }
    try {
      const auto c = attention_frequencies(parsed, k, first_episode, end_episode);
      for (std::size_t i = 0; i < k; ++i) counts[i] += c[i];
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return counts;
}

void write_attention_csv(std::ostream& out, std::span<const std::size_t> counts) {
  out << "class_id,count\n";
  for (std::size_t c = 0; c < counts.size(); ++c) out << c << ',' << counts[c] << '\n';
}

}  // namespace confusable
