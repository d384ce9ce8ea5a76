// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices and the untaped kernels behind every taped op.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gatsv {

class Mat {
 public:
  Mat() = default;

  // Zero-filled (or `fill`-filled) rows x cols matrix.
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);

  // Takes ownership of row-major `data`. Throws DimensionError when the
  // length disagrees with the shape and DomainError on NaN/Inf entries.
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat row_vector(std::span<const double> values);
  static Mat column_vector(std::span<const double> values);
  static Mat scalar(double value);
  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Mat& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }

  // Value of a 1x1 matrix; DimensionError otherwise.
  double scalar_value() const;

  bool all_finite() const noexcept;

  // Exact (bitwise for finite values) equality of shape and entries.
  bool operator==(const Mat& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Mat& m);

// A trainable tensor. `grad` is written by Tape::backward, which takes
// parameters by const reference so that read-only models can be shared
// across scoring threads; the gradient buffer is therefore mutable.
struct Param {
  Param() = default;
  Param(std::string name, Mat value);

  void zero_grad() const;

  std::string name;
  Mat value;
  mutable Mat grad;
};

enum class ElementwiseOp { kAdd, kSub, kMul };

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat elementwise(ElementwiseOp op, const Mat& a, const Mat& b);
// Adds the 1 x cols row `bias` to every row of `a`.
Mat add_row_broadcast(const Mat& a, const Mat& bias);
Mat relu(const Mat& a);
// Row-wise softmax with max subtraction. DimensionError on an empty row.
Mat softmax_rows(const Mat& logits);
double mean_all(const Mat& a);
double sum_all(const Mat& a);
// Row-wise log(sum(exp(row))) as a rows x 1 column.
Mat logsumexp_rows(const Mat& a);

}  // namespace gatsv
