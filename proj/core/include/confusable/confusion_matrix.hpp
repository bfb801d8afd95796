#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "confusable/matrix.hpp"

namespace confusable {

enum class ConfusionKind { Count, RowNormalized, Soft };

std::string_view to_string(ConfusionKind kind);
ConfusionKind parse_confusion_kind(std::string_view text);

// Square K x K matrix of inter-class confusion. Row i describes how instances
// of class i are classified; entry (i, j) is the mass assigned to class j.
// Count matrices hold raw tallies. RowNormalized and Soft matrices are
// row-stochastic.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(std::size_t k, ConfusionKind kind);
  // Validates shape and nonnegativity; row sums for stochastic kinds are
  // checked to 1e-9.
  ConfusionMatrix(Matrix entries, ConfusionKind kind);

  // Every entry 1/k, the estimator's initial state.
  static ConfusionMatrix uniform(std::size_t k);

  std::size_t k() const noexcept { return entries_.rows(); }
  ConfusionKind kind() const noexcept { return kind_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_(i, j); }
  double& operator()(std::size_t i, std::size_t j) noexcept { return entries_(i, j); }

  std::span<const double> row(std::size_t i) const noexcept { return entries_.row(i); }
  std::span<double> row(std::size_t i) noexcept { return entries_.row(i); }
  double row_sum(std::size_t i) const;

  const Matrix& entries() const noexcept { return entries_; }

  // Throws InputError when an invariant is broken. `row_tolerance` bounds
  // |row sum - 1| for stochastic kinds.
  void validate(double row_tolerance = 1e-9) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Matrix entries_;
  ConfusionKind kind_ = ConfusionKind::Count;
};

// Class probabilities over the W classes of one support set.
class PredictiveDistribution {
 public:
  // Requires W >= 2, nonnegative entries, and a sum within 1e-9 of 1.
  explicit PredictiveDistribution(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  // Ties resolve to the lowest index.
  std::size_t argmax() const;
  PredictiveDistribution one_hot_argmax() const;

 private:
  std::vector<double> probs_;
};

struct ClassPair {
  std::size_t true_class;
  std::size_t predicted_class;
};

struct LabeledPrediction {
  std::size_t true_class;  // a class id, not a position
  PredictiveDistribution distribution;
};

ConfusionMatrix count_confusion(std::span<const ClassPair> predictions, std::size_t k);

// All-zero rows become the uniform row 1/K.
ConfusionMatrix normalize_rows(const ConfusionMatrix& counts);

// Entry (m, n) is the mean probability that queries of class_ids[m] assign to
// class_ids[n]. Each distribution is ordered like class_ids.
ConfusionMatrix soft_confusion(std::span<const LabeledPrediction> predictions,
                               std::span<const std::size_t> class_ids);

// Batched form: row q of `probs` is the distribution of query q, whose true
// class sits at position true_positions[q] of the W columns.
ConfusionMatrix soft_confusion(const Matrix& probs, std::span<const std::size_t> true_positions);

// Mean over rows of the L1 distance between corresponding rows.
double mean_row_l1(const ConfusionMatrix& a, const ConfusionMatrix& b);

// Row-major CSV with a `k=<K>,kind=<kind>` header line. Values round-trip
// exactly.
void write_csv(std::ostream& out, const ConfusionMatrix& m);
ConfusionMatrix read_csv(std::istream& in);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace confusable
