// SPDX-License-Identifier: Apache-2.0
#include "gatsv/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gatsv/errors.hpp"

namespace gatsv {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Mat: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(*this));
  }
  if (!all_finite()) {
    throw DomainError("Mat: non-finite entry in " + shape_string(*this) + " matrix");
  }
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw DimensionError("Mat::from_rows: ragged rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

Mat Mat::row_vector(std::span<const double> values) {
  return Mat(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Mat Mat::column_vector(std::span<const double> values) {
  return Mat(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Mat Mat::scalar(double value) { return Mat(1, 1, std::vector<double>{value}); }

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Mat::scalar_value() const {
  if (rows_ != 1 || cols_ != 1) {
    throw DimensionError("expected a 1x1 matrix, got " + shape_string(*this));
  }
  return data_[0];
}

bool Mat::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Param::Param(std::string name, Mat value)
    : name(std::move(name)), value(std::move(value)), grad(this->value.rows(), this->value.cols()) {}

void Param::zero_grad() const {
  if (!grad.same_shape(value)) {
    grad = Mat(value.rows(), value.cols());
    return;
  }
  std::fill(grad.data().begin(), grad.data().end(), 0.0);
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a) + " x " + shape_string(b));
  }
  Mat c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    const double* arow = a.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Mat elementwise(ElementwiseOp op, const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("elementwise: " + shape_string(a) + " vs " + shape_string(b));
  }
  Mat c(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto z = c.data();
  switch (op) {
    case ElementwiseOp::kAdd:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
      break;
    case ElementwiseOp::kSub:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
      break;
    case ElementwiseOp::kMul:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
      break;
  }
  return c;
}

Mat add_row_broadcast(const Mat& a, const Mat& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_row_broadcast: " + shape_string(a) + " + " + shape_string(bias));
  }
  Mat c = a;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto row = c.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias(0, j);
  }
  return c;
}

Mat relu(const Mat& a) {
  Mat c = a;
  for (double& v : c.data()) v = v > 0.0 ? v : 0.0;
  return c;
}

Mat softmax_rows(const Mat& logits) {
  if (logits.cols() == 0) {
    throw DimensionError("softmax_rows: empty row");
  }
  Mat out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

double sum_all(const Mat& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return total;
}

double mean_all(const Mat& a) {
  if (a.empty()) {
    throw DimensionError("mean_all: empty matrix");
  }
  return sum_all(a) / static_cast<double>(a.size());
}

Mat logsumexp_rows(const Mat& a) {
  if (a.cols() == 0) {
    throw DimensionError("logsumexp_rows: empty row");
  }
  Mat out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - mx);
    out(i, 0) = mx + std::log(total);
  }
  return out;
}

}  // namespace gatsv
