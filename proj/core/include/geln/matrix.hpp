#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace geln {

/// Dense row-major matrix of doubles. The workhorse value type for features,
/// logits, probabilities and layer weights.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a(r x k) * b(k x c). Throws ValidationError on shape mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// transpose(a) * b, with a(k x r), b(k x c) -> (r x c).
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// a * transpose(b), with a(r x k), b(c x k) -> (r x c).
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Elementwise sum; shapes must agree.
Matrix add(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);

/// Add a length-cols vector to every row.
void add_row_vector(Matrix& m, std::span<const double> v);

std::vector<double> column_sums(const Matrix& m);

}  // namespace geln
