#include "confusable/learners.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {
namespace {

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InputError("softmax temperature must be positive and finite");
  }
}

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) norms[i] = std::sqrt(dot(m.row(i), m.row(i)));
  return norms;
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Prototypical: return "prototypical";
    case LearnerKind::Matching: return "matching";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view text) {
  if (text == "prototypical") return LearnerKind::Prototypical;
  if (text == "matching") return LearnerKind::Matching;
  throw ConfigError("unknown learner '" + std::string(text) + "' (expected prototypical, matching)");
}

void SupportSet::validate() const {
  if (class_ids.size() < 2) throw InputError("support set needs at least 2 classes");
  if (instances.size() != class_ids.size()) {
    throw InputError("support set has " + std::to_string(instances.size()) +
                     " instance groups for " + std::to_string(class_ids.size()) + " classes");
  }
  for (std::size_t w = 0; w < class_ids.size(); ++w) {
    for (std::size_t v = w + 1; v < class_ids.size(); ++v) {
      if (class_ids[w] == class_ids[v]) {
        throw InputError("support set repeats class " + std::to_string(class_ids[w]));
      }
    }
    if (instances[w].rows() == 0 || instances[w].rows() != instances.front().rows()) {
      throw InputError("support set classes need equal, nonzero instance counts");
    }
    if (instances[w].cols() != instances.front().cols()) {
      throw InputError("support set instances differ in feature dimension");
    }
  }
}

Matrix SupportSet::stacked() const {
  const std::size_t n_s = shot();
  const std::size_t d = instances.empty() ? 0 : instances.front().cols();
  Matrix all(way() * n_s, d);
  for (std::size_t w = 0; w < way(); ++w) {
    for (std::size_t i = 0; i < n_s; ++i) all.set_row(w * n_s + i, instances[w].row(i));
  }
  return all;
}

void softmax_inplace(std::span<double> logits) {
  double peak = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericalError("non-finite logits");
    peak = std::max(peak, v);
  }
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : logits) v /= total;
}

Matrix block_means(const Matrix& rows, std::size_t shot) {
  const std::size_t groups = rows.rows() / shot;
  Matrix means(groups, rows.cols());
  const double inv = 1.0 / static_cast<double>(shot);
  for (std::size_t g = 0; g < groups; ++g) {
    auto dst = means.row(g);
    for (std::size_t i = 0; i < shot; ++i) {
      const auto src = rows.row(g * shot + i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    for (double& v : dst) v *= inv;
  }
  return means;
}

Matrix prototype_logits(const Matrix& query_embeddings, const Matrix& prototypes, double temperature) {
  Matrix logits(query_embeddings.rows(), prototypes.rows());
  for (std::size_t q = 0; q < query_embeddings.rows(); ++q) {
    for (std::size_t w = 0; w < prototypes.rows(); ++w) {
      logits(q, w) = -squared_distance(query_embeddings.row(q), prototypes.row(w)) / temperature;
    }
  }
  return logits;
}

Matrix PrototypicalLearner::predict(const SupportSet& support, const Matrix& queries,
                                    double temperature) const {
  support.validate();
  check_temperature(temperature);
  const Matrix prototypes = block_means(embed_batch(*params_, support.stacked()), support.shot());
  Matrix probs = prototype_logits(embed_batch(*params_, queries), prototypes, temperature);
  for (std::size_t q = 0; q < probs.rows(); ++q) softmax_inplace(probs.row(q));
  return probs;
}

Matrix MatchingLearner::predict(const SupportSet& support, const Matrix& queries,
                                double temperature) const {
  support.validate();
  check_temperature(temperature);
  const std::size_t n_s = support.shot();
  const Matrix support_emb = embed_batch(*params_, support.stacked());
  const Matrix query_emb = embed_batch(*params_, queries);
  const auto support_norms = row_norms(support_emb);
  const auto query_norms = row_norms(query_emb);

  Matrix probs(queries.rows(), support.way());
  std::vector<double> attention(support_emb.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t i = 0; i < support_emb.rows(); ++i) {
      const double cosine = dot(query_emb.row(q), support_emb.row(i)) /
                            ((query_norms[q] + kNormEpsilon) * (support_norms[i] + kNormEpsilon));
      attention[i] = cosine / temperature;
    }
    softmax_inplace(attention);
    for (std::size_t i = 0; i < attention.size(); ++i) probs(q, i / n_s) += attention[i];
  }
  return probs;
}

std::unique_ptr<MetaLearner> make_learner(LearnerKind kind, const LearnerParams& params) {
  switch (kind) {
    case LearnerKind::Prototypical: return std::make_unique<PrototypicalLearner>(params);
    case LearnerKind::Matching: return std::make_unique<MatchingLearner>(params);
  }
  throw ConfigError("unknown learner kind");
}

namespace {

PredictiveDistribution single_query(const MetaLearner& learner, const SupportSet& support,
                                    std::span<const double> query, double temperature) {
  Matrix q(1, query.size(), std::vector<double>(query.begin(), query.end()));
  const Matrix probs = learner.predict(support, q, temperature);
  return PredictiveDistribution({probs.values().begin(), probs.values().end()});
}

}  // namespace

PredictiveDistribution prototypical_probs(const LearnerParams& params, const SupportSet& support,
                                          std::span<const double> query, double temperature) {
  return single_query(PrototypicalLearner(params), support, query, temperature);
}

PredictiveDistribution matching_probs(const LearnerParams& params, const SupportSet& support,
                                      std::span<const double> query, double temperature) {
  return single_query(MatchingLearner(params), support, query, temperature);
}

}  // namespace confusable
