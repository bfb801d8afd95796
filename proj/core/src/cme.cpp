#include "confusable/cme.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "confusable/errors.hpp"
#include "confusable/task_sampler.hpp"

namespace confusable {

void EstimatorConfig::validate(std::size_t k) const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("estimator: rho must lie in [0, 1]");
  if (n_te < 2 || n_te > k) {
    throw ConfigError("estimator: n_te = " + std::to_string(n_te) + " must lie in [2, K = " +
                      std::to_string(k) + "]");
  }
  if (m_steps == 0) throw ConfigError("estimator: m_steps must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("estimator: temperature must be positive");
}

EstimatorState EstimatorState::initial(std::size_t k, const EstimatorConfig& config) {
  config.validate(k);
  return EstimatorState{ConfusionMatrix::uniform(k), config, 0};
}

std::vector<std::size_t> select_window_classes(std::size_t k, std::size_t n_te, Rng& rng) {
  std::vector<std::size_t> classes;
  if (n_te == k) {
    classes.resize(k);
    for (std::size_t c = 0; c < k; ++c) classes[c] = c;
    return classes;
  }
  classes = sample_indices(k, n_te, rng);
  std::sort(classes.begin(), classes.end());
  return classes;
}

WindowDraw draw_window(const Dataset& dataset, std::vector<std::size_t> class_ids, std::size_t n_s,
                       std::size_t n_q, Rng& rng) {
  for (std::size_t c : class_ids) require_class_size(dataset, c, n_s + n_q);
  WindowDraw draw;
  draw.queries = Matrix(class_ids.size() * n_q, dataset.dim());
  draw.query_positions.reserve(class_ids.size() * n_q);
  draw.support.class_ids = class_ids;
  draw.support.instances.reserve(class_ids.size());
  for (std::size_t m = 0; m < class_ids.size(); ++m) {
    const std::size_t c = class_ids[m];
    const auto support = sample_instances(dataset, c, n_s, rng);
    const auto query = sample_instances(dataset, c, n_q, rng, support);
    draw.support.instances.push_back(gather_instances(dataset, c, support));
    for (std::size_t i : query) {
      draw.queries.set_row(draw.query_positions.size(), dataset.instance(c, i));
      draw.query_positions.push_back(m);
    }
  }
  draw.class_ids = std::move(class_ids);
  return draw;
}

ConfusionMatrix window_confusion(const MetaLearner& learner, const WindowDraw& draw,
                                 double temperature, ConfusionSource source) {
  Matrix probs = learner.predict(draw.support, draw.queries, temperature);
  if (source == ConfusionSource::ArgmaxIndicator) {
    for (std::size_t q = 0; q < probs.rows(); ++q) {
      auto row = probs.row(q);
      const auto best = std::max_element(row.begin(), row.end()) - row.begin();
      std::fill(row.begin(), row.end(), 0.0);
      row[static_cast<std::size_t>(best)] = 1.0;
    }
  }
  return soft_confusion(probs, draw.query_positions);
}

WindowObservation observe_window(const Dataset& dataset, const MetaLearner& learner,
                                 const EstimatorState& state, std::size_t n_s, std::size_t n_q,
                                 Rng& rng, ConfusionSource source) {
  const std::size_t k = state.estimate.k();
  if (dataset.num_classes() != k) {
    throw InputError("estimator covers " + std::to_string(k) + " classes, dataset has " +
                     std::to_string(dataset.num_classes()));
  }
  state.config.validate(k);
  auto classes = select_window_classes(k, state.config.n_te, rng);
  const WindowDraw draw = draw_window(dataset, std::move(classes), n_s, n_q, rng);
  return {draw.class_ids, window_confusion(learner, draw, state.config.temperature, source)};
}

void apply_update(EstimatorState& state, const WindowObservation& obs) {
  const std::size_t w = obs.class_ids.size();
  auto& e = state.estimate;
  if (obs.e_prime.k() != w) throw InputError("window observation size mismatch");
  for (std::size_t c : obs.class_ids) {
    if (c >= e.k()) throw InputError("window class " + std::to_string(c) + " out of range");
  }
  const double rho = state.config.rho;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t vi = obs.class_ids[i];
    double z = 0.0;
    for (std::size_t j = 0; j < w; ++j) z += e(vi, obs.class_ids[j]);
    for (std::size_t j = 0; j < w; ++j) {
      double& entry = e(vi, obs.class_ids[j]);
      entry = rho * entry + (1.0 - rho) * obs.e_prime(i, j) * z;
    }
  }
  ++state.steps;
}

void estimate_step(EstimatorState& state, const Dataset& dataset, const MetaLearner& learner,
                   std::size_t n_s, std::size_t n_q, Rng& rng, ConfusionSource source) {
  apply_update(state, observe_window(dataset, learner, state, n_s, n_q, rng, source));
}

void write_estimator(std::ostream& out, const EstimatorState& state) {
  out << "# rho=" << format_double(state.config.rho) << ",n_te=" << state.config.n_te
      << ",m_steps=" << state.config.m_steps
      << ",temperature=" << format_double(state.config.temperature) << ",steps=" << state.steps
      << '\n';
  write_csv(out, state.estimate);
}

EstimatorState read_estimator(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("# ")) {
    throw ParseError("expected estimator metadata line", 1);
  }
  EstimatorState state;
  std::istringstream fields(line.substr(2));
  std::string field;
  try {
    while (std::getline(fields, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw ParseError("bad metadata field '" + field + "'", 1);
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "rho") state.config.rho = parse_double(value);
      else if (key == "n_te") state.config.n_te = std::stoul(value);
      else if (key == "m_steps") state.config.m_steps = std::stoul(value);
      else if (key == "temperature") state.config.temperature = parse_double(value);
      else if (key == "steps") state.steps = std::stoull(value);
      else throw ParseError("unknown metadata field '" + key + "'", 1);
    }
  } catch (const InputError& e) {
    throw ParseError(e.what(), 1);
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("bad metadata value: ") + e.what(), 1);
  }
  try {
    state.estimate = read_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line() + 1);
  }
  return state;
}

}  // namespace confusable
