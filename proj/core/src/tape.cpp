// SPDX-License-Identifier: Apache-2.0
#include "gatsv/tape.hpp"

#include <cmath>

#include "gatsv/errors.hpp"

namespace gatsv {

namespace {

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw ArgumentError(std::string(op) + ": operands recorded on different tapes");
  }
}

void accumulate(Mat& into, const Mat& from) {
  auto dst = into.data();
  auto src = from.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

const Mat& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Mat value) {
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Param& param) {
  Node node;
  node.op = "parameter";
  node.external = &param.value;
  node.param = &param;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Mat value, BackwardFn backward) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Mat& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external != nullptr ? *n.external : n.value;
}

Mat& Tape::adjoint(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.has_adjoint) {
    const Mat& v = value(id);
    n.adjoint = Mat(v.rows(), v.cols());
    n.has_adjoint = true;
  }
  return n.adjoint;
}

bool Tape::has_adjoint(std::size_t id) const { return nodes_.at(id).has_adjoint; }

void Tape::corrupt_adjoint_for_testing(std::string op, double factor) {
  corrupt_op_ = std::move(op);
  corrupt_factor_ = factor;
}

std::size_t Tape::backward(Var loss) {
  if (&loss.tape() != this) {
    throw ArgumentError("backward: loss was recorded on another tape");
  }
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw DimensionError("backward: loss must be 1x1, got " + shape_string(loss.value()));
  }
  adjoint(loss.id())(0, 0) += 1.0;

  std::size_t replayed = 0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_adjoint) continue;
    if (!corrupt_op_.empty() && corrupt_op_ == n.op) {
      for (double& v : n.adjoint.data()) v *= corrupt_factor_;
    }
    if (n.param != nullptr) {
      Mat& g = n.param->grad;
      if (!g.same_shape(*n.external)) g = Mat(n.external->rows(), n.external->cols());
      accumulate(g, n.adjoint);
    } else if (n.backward) {
      n.backward(*this, i);
      ++replayed;
    }
  }
  return replayed;
}

// ---------------------------------------------------------------------------
// Taped ops.

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Mat out = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.adjoint(self);
    accumulate(t.adjoint(ia), matmul(g, transpose(t.value(ib))));
    accumulate(t.adjoint(ib), matmul(transpose(t.value(ia)), g));
  });
}

Var elementwise(ElementwiseOp op, Var a, Var b) {
  require_same_tape(a, b, "elementwise");
  Mat out = elementwise(op, a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  const char* name = op == ElementwiseOp::kAdd ? "add" : op == ElementwiseOp::kSub ? "sub" : "mul";
  return a.tape().record(name, std::move(out), [op, ia, ib](Tape& t, std::size_t self) {
    const Mat g = t.adjoint(self);
    switch (op) {
      case ElementwiseOp::kAdd:
        accumulate(t.adjoint(ia), g);
        accumulate(t.adjoint(ib), g);
        break;
      case ElementwiseOp::kSub: {
        accumulate(t.adjoint(ia), g);
        auto db = t.adjoint(ib).data();
        auto src = g.data();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] -= src[i];
        break;
      }
      case ElementwiseOp::kMul:
        accumulate(t.adjoint(ia), elementwise(ElementwiseOp::kMul, g, t.value(ib)));
        accumulate(t.adjoint(ib), elementwise(ElementwiseOp::kMul, g, t.value(ia)));
        break;
    }
  });
}

Var add(Var a, Var b) { return elementwise(ElementwiseOp::kAdd, a, b); }
Var sub(Var a, Var b) { return elementwise(ElementwiseOp::kSub, a, b); }
Var mul(Var a, Var b) { return elementwise(ElementwiseOp::kMul, a, b); }

Var add_row_broadcast(Var a, Var bias) {
  require_same_tape(a, bias, "add_row_broadcast");
  Mat out = add_row_broadcast(a.value(), bias.value());
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape().record("add_row_broadcast", std::move(out), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.adjoint(self);
    accumulate(t.adjoint(ia), g);
    Mat& db = t.adjoint(ib);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
  });
}

Var scale(Var a, double factor) {
  Mat out = a.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape().record("scale", std::move(out), [ia, factor](Tape& t, std::size_t self) {
    const Mat& g = t.adjoint(self);
    auto d = t.adjoint(ia).data();
    auto src = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * src[i];
  });
}

Var relu(Var a) {
  Mat out = relu(a.value());
  const std::size_t ia = a.id();
  return a.tape().record("relu", std::move(out), [ia](Tape& t, std::size_t self) {
    const Mat& g = t.adjoint(self);
    auto x = t.value(ia).data();
    auto d = t.adjoint(ia).data();
    auto src = g.data();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (x[i] > 0.0) d[i] += src[i];
  });
}

Var softmax_rows(Var logits) {
  Mat out = softmax_rows(logits.value());
  const std::size_t ia = logits.id();
  return logits.tape().record("softmax_rows", std::move(out), [ia](Tape& t, std::size_t self) {
    const Mat& g = t.adjoint(self);
    const Mat& y = t.value(self);
    Mat& d = t.adjoint(ia);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) d(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var sum_all(Var a) {
  Mat out = Mat::scalar(sum_all(a.value()));
  const std::size_t ia = a.id();
  return a.tape().record("sum_all", std::move(out), [ia](Tape& t, std::size_t self) {
    const double g = t.adjoint(self)(0, 0);
    for (double& v : t.adjoint(ia).data()) v += g;
  });
}

Var mean_all(Var a) {
  Mat out = Mat::scalar(mean_all(a.value()));
  const std::size_t ia = a.id();
  const double inv = 1.0 / static_cast<double>(a.value().size());
  return a.tape().record("mean_all", std::move(out), [ia, inv](Tape& t, std::size_t self) {
    const double g = t.adjoint(self)(0, 0) * inv;
    for (double& v : t.adjoint(ia).data()) v += g;
  });
}

Var log(Var a) {
  Mat out = a.value();
  for (double& v : out.data()) {
    if (!(v > 0.0)) {
      throw DomainError("log: non-positive argument " + std::to_string(v));
    }
    v = std::log(v);
  }
  const std::size_t ia = a.id();
  return a.tape().record("log", std::move(out), [ia](Tape& t, std::size_t self) {
    auto g = t.adjoint(self).data();
    auto x = t.value(ia).data();
    auto d = t.adjoint(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] / x[i];
  });
}

Var exp(Var a) {
  Mat out = a.value();
  for (double& v : out.data()) v = std::exp(v);
  const std::size_t ia = a.id();
  return a.tape().record("exp", std::move(out), [ia](Tape& t, std::size_t self) {
    auto g = t.adjoint(self).data();
    auto y = t.value(self).data();
    auto d = t.adjoint(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i];
  });
}

Var logsumexp_rows(Var a) {
  Mat out = logsumexp_rows(a.value());
  const std::size_t ia = a.id();
  return a.tape().record("logsumexp_rows", std::move(out), [ia](Tape& t, std::size_t self) {
    const Mat& g = t.adjoint(self);
    const Mat& lse = t.value(self);
    const Mat& x = t.value(ia);
    Mat& d = t.adjoint(ia);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j)
        d(i, j) += g(i, 0) * std::exp(x(i, j) - lse(i, 0));
  });
}

Var gather_rows(Var a, std::vector<std::size_t> indices) {
  const Mat& src = a.value();
  Mat out(indices.size(), src.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= src.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[r]) + " out of " +
                           shape_string(src));
    }
    auto from = src.row(indices[r]);
    std::copy(from.begin(), from.end(), out.row(r).begin());
  }
  const std::size_t ia = a.id();
  return a.tape().record("gather_rows", std::move(out),
                         [ia, idx = std::move(indices)](Tape& t, std::size_t self) {
                           const Mat& g = t.adjoint(self);
                           Mat& d = t.adjoint(ia);
                           for (std::size_t r = 0; r < idx.size(); ++r) {
                             auto dst = d.row(idx[r]);
                             auto from = g.row(r);
                             for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += from[j];
                           }
                         });
}

Var gather_columns_per_row(Var a, std::vector<std::vector<std::size_t>> columns) {
  const Mat& src = a.value();
  if (columns.size() != src.rows()) {
    throw DimensionError("gather_columns_per_row: need one column list per row");
  }
  const std::size_t width = columns.empty() ? 0 : columns.front().size();
  Mat out(src.rows(), width);
  for (std::size_t r = 0; r < columns.size(); ++r) {
    if (columns[r].size() != width) {
      throw DimensionError("gather_columns_per_row: ragged column lists");
    }
    for (std::size_t j = 0; j < width; ++j) {
      if (columns[r][j] >= src.cols()) {
        throw DimensionError("gather_columns_per_row: column out of range");
      }
      out(r, j) = src(r, columns[r][j]);
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record("gather_columns_per_row", std::move(out),
                         [ia, cols = std::move(columns)](Tape& t, std::size_t self) {
                           const Mat& g = t.adjoint(self);
                           Mat& d = t.adjoint(ia);
                           for (std::size_t r = 0; r < cols.size(); ++r)
                             for (std::size_t j = 0; j < cols[r].size(); ++j)
                               d(r, cols[r][j]) += g(r, j);
                         });
}

Var concat_columns(std::span<const Var> parts) {
  if (parts.empty()) {
    throw ArgumentError("concat_columns: no operands");
  }
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat_columns");
    if (p.rows() != rows) {
      throw DimensionError("concat_columns: row counts differ");
    }
    cols += p.cols();
  }
  Mat out(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Mat& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    offset += v.cols();
    ids.push_back(p.id());
  }
  return parts.front().tape().record(
      "concat_columns", std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
        const Mat& g = t.adjoint(self);
        std::size_t off = 0;
        for (std::size_t id : ids) {
          Mat& d = t.adjoint(id);
          for (std::size_t i = 0; i < d.rows(); ++i)
            for (std::size_t j = 0; j < d.cols(); ++j) d(i, j) += g(i, off + j);
          off += d.cols();
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) {
    throw ArgumentError("concat_rows: no operands");
  }
  const std::size_t cols = parts.front().cols();
  std::vector<double> data;
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts differ");
    }
    auto v = p.value().data();
    data.insert(data.end(), v.begin(), v.end());
    rows += p.rows();
    ids.push_back(p.id());
  }
  Mat out(rows, cols);
  std::copy(data.begin(), data.end(), out.data().begin());
  return parts.front().tape().record(
      "concat_rows", std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
        auto g = t.adjoint(self).data();
        std::size_t off = 0;
        for (std::size_t id : ids) {
          auto d = t.adjoint(id).data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[off + i];
          off += d.size();
        }
      });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Mat& src = a.value();
  if (rows * cols != src.size()) {
    throw DimensionError("reshape: " + shape_string(src) + " to " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  Mat out(rows, cols);
  std::copy(src.data().begin(), src.data().end(), out.data().begin());
  const std::size_t ia = a.id();
  return a.tape().record("reshape", std::move(out), [ia](Tape& t, std::size_t self) {
    auto g = t.adjoint(self).data();
    auto d = t.adjoint(ia).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
  });
}

Var select(const std::vector<std::uint8_t>& take_first, Var a, Var b) {
  require_same_tape(a, b, "select");
  if (!a.value().same_shape(b.value()) || take_first.size() != a.value().size()) {
    throw DimensionError("select: mask and operand shapes disagree");
  }
  Mat out = b.value();
  auto x = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    if (take_first[i]) o[i] = x[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("select", std::move(out), [ia, ib, mask = take_first](Tape& t, std::size_t self) {
    auto g = t.adjoint(self).data();
    auto da = t.adjoint(ia).data();
    auto db = t.adjoint(ib).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (mask[i]) {
        da[i] += g[i];
      } else {
        db[i] += g[i];
      }
    }
  });
}

}  // namespace gatsv
