#include "fixtures.hpp"

#include <atomic>
#include <random>
#include <unistd.h>

namespace confusable::testing {

Dataset class_id_dataset(std::size_t k, std::size_t per_class, std::size_t dim) {
  std::vector<Matrix> classes;
  for (std::size_t c = 0; c < k; ++c) {
    Matrix m(per_class, dim);
    for (std::size_t i = 0; i < per_class; ++i) {
      m(i, 0) = static_cast<double>(c);
      if (dim > 1) m(i, 1) = static_cast<double>(i);
    }
    classes.push_back(std::move(m));
  }
  return Dataset(std::move(classes));
}

Matrix random_stochastic(std::size_t k, Rng& rng, double zero_fraction) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = (i != j && u(rng) < zero_fraction) ? 0.0 : u(rng) + 1e-3;
      m(i, j) = v;
      total += v;
    }
    for (std::size_t j = 0; j < k; ++j) m(i, j) /= total;
  }
  return m;
}

std::vector<double> restricted_row(const Matrix& table, std::size_t y,
                                   const std::vector<std::size_t>& classes) {
  std::vector<double> row;
  double total = 0.0;
  for (std::size_t c : classes) {
    row.push_back(table(y, c));
    total += table(y, c);
  }
  for (double& v : row) v /= total;
  return row;
}

namespace {

std::size_t query_class(const Matrix& queries, std::size_t q) {
  return static_cast<std::size_t>(queries(q, 0));
}

}  // namespace

Matrix TableLearner::predict(const SupportSet& support, const Matrix& queries, double) const {
  Matrix out(queries.rows(), support.way());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    out.set_row(q, restricted_row(table_, query_class(queries, q), support.class_ids));
  }
  return out;
}

Matrix SampledTableLearner::predict(const SupportSet& support, const Matrix& queries,
                                    double) const {
  Matrix out(queries.rows(), support.way());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto row = restricted_row(table_, query_class(queries, q), support.class_ids);
    std::discrete_distribution<std::size_t> pick(row.begin(), row.end());
    out(q, pick(rng_)) = 1.0;
  }
  return out;
}

Matrix UniformLearner::predict(const SupportSet& support, const Matrix& queries, double) const {
  return Matrix(queries.rows(), support.way(), 1.0 / static_cast<double>(support.way()));
}

Matrix PerfectLearner::predict(const SupportSet& support, const Matrix& queries, double) const {
  Matrix out(queries.rows(), support.way());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t w = 0; w < support.way(); ++w) {
      if (support.class_ids[w] == query_class(queries, q)) out(q, w) = 1.0;
    }
  }
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("confusable-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace confusable::testing

#include <boost/math/distributions/chi_squared.hpp>

namespace confusable::testing {

double chi_square_p_value(const std::vector<double>& observed, const std::vector<double>& probs) {
  double total = 0.0;
  for (double o : observed) total += o;
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] == 0.0) {
      if (observed[i] != 0.0) return 0.0;
      continue;
    }
    const double expected = probs[i] * total;
    stat += (observed[i] - expected) * (observed[i] - expected) / expected;
    ++cells;
  }
  const boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace confusable::testing
