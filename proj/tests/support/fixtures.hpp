#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "confusable/confusion_matrix.hpp"
#include "confusable/dataset.hpp"
#include "confusable/learners.hpp"
#include "confusable/matrix.hpp"
#include "confusable/rng.hpp"

namespace confusable::testing {

// Instance i of class c has features [c, i, 0, ...]. Learners below read the
// class from feature 0.
Dataset class_id_dataset(std::size_t k, std::size_t per_class, std::size_t dim = 2);

// Row-stochastic K x K matrix with random positive entries.
Matrix random_stochastic(std::size_t k, Rng& rng, double zero_fraction = 0.0);

// Frozen learner whose prediction for a query of class y is row y of `table`
// restricted to the support classes and renormalized.
class TableLearner : public MetaLearner {
 public:
  explicit TableLearner(Matrix table) : table_(std::move(table)) {}
  Matrix predict(const SupportSet& support, const Matrix& queries,
                 double temperature) const override;
  const Matrix& table() const { return table_; }

 private:
  Matrix table_;
};

// Like TableLearner but each query receives a one-hot prediction sampled from
// the restricted row, using the learner's own generator.
class SampledTableLearner : public MetaLearner {
 public:
  SampledTableLearner(Matrix table, std::uint64_t seed) : table_(std::move(table)), rng_(seed) {}
  Matrix predict(const SupportSet& support, const Matrix& queries,
                 double temperature) const override;

 private:
  Matrix table_;
  mutable Rng rng_;
};

class UniformLearner : public MetaLearner {
 public:
  Matrix predict(const SupportSet& support, const Matrix& queries,
                 double temperature) const override;
};

// One-hot on the query's true class.
class PerfectLearner : public MetaLearner {
 public:
  Matrix predict(const SupportSet& support, const Matrix& queries,
                 double temperature) const override;
};

// Row of `table` for class y restricted to `classes`, renormalized.
std::vector<double> restricted_row(const Matrix& table, std::size_t y,
                                   const std::vector<std::size_t>& classes);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace confusable::testing

namespace confusable::testing {

// Upper-tail p-value of Pearson's statistic for observed counts against
// expected probabilities (cells with zero expectation must be empty).
double chi_square_p_value(const std::vector<double>& observed, const std::vector<double>& probs);

}  // namespace confusable::testing
