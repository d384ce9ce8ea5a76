// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode gradient tape over whole matrices.
//
// Every taped op evaluates its forward value eagerly and appends one node
// holding that value and a closure that, given the node's adjoint, adds the
// corresponding contributions into its inputs' adjoints. Tape::backward
// replays the nodes once, in reverse recording order, and finally adds the
// adjoints of parameter leaves into Param::grad.
//
// A tape is single-threaded. Independent tapes may run concurrently as long
// as no two of them call backward() on tapes that share a Param.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatsv/numeric.hpp"

namespace gatsv {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Mat& value() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the tape and the id of the node being replayed.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding a copy of `value`; receives no gradient sink.
  Var constant(Mat value);

  // Leaf that reads `param.value` in place (no copy) and routes its
  // adjoint into `param.grad` on backward(). The Param must outlive the tape.
  Var parameter(const Param& param);

  // Appends an op node. `backward` may be empty for ops with no inputs that
  // need gradients.
  Var record(const char* op, Mat value, BackwardFn backward);

  // Seeds d loss / d loss = 1 and replays every node reachable from `loss`
  // in reverse order, then accumulates parameter gradients additively.
  // Returns the number of op nodes replayed. Calling it twice without
  // zeroing Param grads accumulates both passes.
  std::size_t backward(Var loss);

  const Mat& value(std::size_t id) const;
  // Adjoint buffer of node `id`, allocated (zero) on first access.
  Mat& adjoint(std::size_t id);
  bool has_adjoint(std::size_t id) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::string_view op_name(std::size_t id) const { return nodes_[id].op; }

  // Test hook: multiplies the adjoint of every node recorded as `op` by
  // `factor` before it is propagated. Used to prove gradient checks detect
  // a broken adjoint.
  void corrupt_adjoint_for_testing(std::string op, double factor);

 private:
  struct Node {
    const char* op = "";
    Mat value;
    const Mat* external = nullptr;
    const Param* param = nullptr;
    Mat adjoint;
    bool has_adjoint = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::string corrupt_op_;
  double corrupt_factor_ = 1.0;
};

// Taped counterparts of the kernels in numeric.hpp. All operands must live
// on the same tape.
Var matmul(Var a, Var b);
Var elementwise(ElementwiseOp op, Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row_broadcast(Var a, Var bias);
Var scale(Var a, double factor);
Var relu(Var a);
Var softmax_rows(Var logits);
Var mean_all(Var a);
Var sum_all(Var a);
// Elementwise natural log. DomainError on any entry <= 0.
Var log(Var a);
Var exp(Var a);
Var logsumexp_rows(Var a);

// Row r of the result is row indices[r] of `a`.
Var gather_rows(Var a, std::vector<std::size_t> indices);
// Row r of the result holds a(r, columns[r][0]), a(r, columns[r][1]), ...;
// every row must select the same count.
Var gather_columns_per_row(Var a, std::vector<std::vector<std::size_t>> columns);
Var concat_columns(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
// Same row-major data, new shape.
Var reshape(Var a, std::size_t rows, std::size_t cols);
// Entry i is a[i] where take_first[i] is set, else b[i].
Var select(const std::vector<std::uint8_t>& take_first, Var a, Var b);

}  // namespace gatsv
