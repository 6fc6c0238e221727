#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "kanopt/errors.hpp"

namespace kanopt {

/// Dense row-major matrix of doubles. Rows are solutions, columns variables.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    for (const auto& r : rows) m.append_row(std::vector<double>(r));
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void set_row(std::size_t r, std::span<const double> values) {
    for (std::size_t c = 0; c < cols_; ++c) data_[r * cols_ + c] = values[c];
  }

  void append_row(std::span<const double> values) {
    if (cols_ == 0 && rows_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw DimensionMismatch("appended row has wrong width");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }
  void append_row(const std::vector<double>& values) {
    append_row(std::span<const double>(values));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  const std::vector<double>& data() const { return data_; }

  /// Rows of `top` followed by rows of `bottom`; either may be empty.
  static Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.empty()) return bottom;
    if (bottom.empty()) return top;
    if (top.cols() != bottom.cols()) throw DimensionMismatch("vstack: column mismatch");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    for (std::size_t r = 0; r < top.rows(); ++r) out.set_row(r, top.row(r));
    for (std::size_t r = 0; r < bottom.rows(); ++r) out.set_row(top.rows() + r, bottom.row(r));
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace kanopt
