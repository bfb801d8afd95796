#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace confusable {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double value);
  void set_row(std::size_t r, std::span<const double> values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b^T, with a: n x k and b: m x k. Resizes out to n x m.
void multiply_transposed(const Matrix& a, const Matrix& b, Matrix& out);

// out = a * b, with a: n x k and b: k x m.
void multiply(const Matrix& a, const Matrix& b, Matrix& out);

// acc += a^T * b, with a: n x p and b: n x q; acc must be p x q.
void accumulate_transposed_product(const Matrix& a, const Matrix& b, Matrix& acc);

double squared_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

// Copies the listed rows of src into a new matrix, preserving order.
Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows);

}  // namespace confusable
