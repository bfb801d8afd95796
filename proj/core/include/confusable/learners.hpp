#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "confusable/confusion_matrix.hpp"
#include "confusable/embedding.hpp"
#include "confusable/matrix.hpp"

namespace confusable {

enum class LearnerKind { Prototypical, Matching };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view text);

// Labeled instances a learner conditions on: W >= 2 distinct classes with the
// same number of instances each.
struct SupportSet {
  std::vector<std::size_t> class_ids;
  std::vector<Matrix> instances;  // instances[w] holds the rows of class_ids[w]

  std::size_t way() const noexcept { return class_ids.size(); }
  std::size_t shot() const noexcept { return instances.empty() ? 0 : instances.front().rows(); }
  // Throws InputError.
  void validate() const;
  // All support rows stacked class by class.
  Matrix stacked() const;
};

// Few-shot classifier: conditions on a support set and returns, for each
// query row, a distribution over support.class_ids in that order.
class MetaLearner {
 public:
  virtual ~MetaLearner() = default;
  virtual Matrix predict(const SupportSet& support, const Matrix& queries,
                         double temperature) const = 0;
};

// Softmax over negative squared distances to class prototypes (mean support
// embeddings), divided by the temperature.
class PrototypicalLearner final : public MetaLearner {
 public:
  explicit PrototypicalLearner(const LearnerParams& params) : params_(&params) {}
  Matrix predict(const SupportSet& support, const Matrix& queries,
                 double temperature) const override;

 private:
  const LearnerParams* params_;
};

// Attention over individual support embeddings by cosine similarity; a class
// receives the attention mass of its support instances.
class MatchingLearner final : public MetaLearner {
 public:
  explicit MatchingLearner(const LearnerParams& params) : params_(&params) {}
  Matrix predict(const SupportSet& support, const Matrix& queries,
                 double temperature) const override;

 private:
  const LearnerParams* params_;
};

// The learner keeps a reference to params; params must outlive it.
std::unique_ptr<MetaLearner> make_learner(LearnerKind kind, const LearnerParams& params);

PredictiveDistribution prototypical_probs(const LearnerParams& params, const SupportSet& support,
                                          std::span<const double> query, double temperature = 1.0);
PredictiveDistribution matching_probs(const LearnerParams& params, const SupportSet& support,
                                      std::span<const double> query, double temperature = 1.0);

// Added to vector norms in cosine similarity.
inline constexpr double kNormEpsilon = 1e-12;

void softmax_inplace(std::span<double> logits);

// Prototype logits in embedding space: row q, column w holds
// -||query_q - prototype_w||^2 / temperature.
Matrix prototype_logits(const Matrix& query_embeddings, const Matrix& prototypes, double temperature);
// Mean of each consecutive block of `shot` rows.
Matrix block_means(const Matrix& rows, std::size_t shot);

}  // namespace confusable
