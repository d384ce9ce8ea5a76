// SPDX-License-Identifier: Apache-2.0
#include "gatsv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gatsv/errors.hpp"
#include "gatsv/rng.hpp"

namespace gatsv {

double cosine_score(SseView a, SseView b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_score: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw DomainError("cosine_score: zero vector");
  }
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double cosine_mean_score(const UtteranceSSEs& enroll, const UtteranceSSEs& test) {
  const auto a = mean_embedding(enroll);
  const auto b = mean_embedding(test);
  return cosine_score(a, b);
}

double tta_score(const UtteranceSSEs& enroll, const UtteranceSSEs& test) {
  double total = 0.0;
  for (std::size_t i = 0; i < enroll.segment_count(); ++i)
    for (std::size_t j = 0; j < test.segment_count(); ++j)
      total += cosine_score(enroll.segment(i), test.segment(j));
  return total / static_cast<double>(enroll.segment_count() * test.segment_count());
}

std::uint32_t parse_bvector_ops(const std::string& text) {
  std::uint32_t ops = 0;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "mul") {
      ops |= kBVecMul;
    } else if (item == "add") {
      ops |= kBVecAdd;
    } else if (item == "sub") {
      ops |= kBVecSub;
    } else if (item == "concat") {
      ops |= kBVecConcat;
    } else {
      throw ArgumentError("unknown b-vector op '" + item + "' (expected mul, add, sub, concat)");
    }
  }
  if (ops == 0) throw ArgumentError("b-vector op list is empty");
  return ops;
}

std::string format_bvector_ops(std::uint32_t ops) {
  std::string out;
  auto append = [&](std::uint32_t flag, const char* name) {
    if (ops & flag) {
      if (!out.empty()) out += ',';
      out += name;
    }
  };
  append(kBVecMul, "mul");
  append(kBVecAdd, "add");
  append(kBVecSub, "sub");
  append(kBVecConcat, "concat");
  return out;
}

std::size_t bvector_feature_width(std::uint32_t ops, std::size_t dim) {
  std::size_t blocks = 0;
  if (ops & kBVecMul) ++blocks;
  if (ops & kBVecAdd) ++blocks;
  if (ops & kBVecSub) ++blocks;
  if (ops & kBVecConcat) blocks += 2;
  return blocks * dim;
}

std::vector<double> bvector_features(SseView a, SseView b, std::uint32_t ops) {
  if (a.size() != b.size()) {
    throw DimensionError("bvector_features: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  std::vector<double> f;
  f.reserve(bvector_feature_width(ops, a.size()));
  if (ops & kBVecMul)
    for (std::size_t i = 0; i < a.size(); ++i) f.push_back(a[i] * b[i]);
  if (ops & kBVecAdd)
    for (std::size_t i = 0; i < a.size(); ++i) f.push_back(a[i] + b[i]);
  if (ops & kBVecSub)
    for (std::size_t i = 0; i < a.size(); ++i) f.push_back(a[i] - b[i]);
  if (ops & kBVecConcat) {
    f.insert(f.end(), a.begin(), a.end());
    f.insert(f.end(), b.begin(), b.end());
  }
  return f;
}

BVectorModel::BVectorModel(std::uint32_t ops, std::size_t input_dim,
                           std::vector<std::size_t> hidden, double dropout_rate,
                           PairPooling pooling, std::vector<Linear> layers)
    : ops_(ops),
      input_dim_(input_dim),
      hidden_(std::move(hidden)),
      dropout_rate_(dropout_rate),
      pooling_(pooling),
      layers_(std::move(layers)) {
  if (ops_ == 0 || (ops_ & ~0xfu) != 0) throw ArgumentError("b-vector: invalid op mask");
  if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0)) {
    throw ArgumentError("b-vector: dropout rate must be in [0, 1)");
  }
  if (layers_.size() != hidden_.size() + 1) {
    throw ArgumentError("b-vector: expected " + std::to_string(hidden_.size() + 1) + " layers");
  }
  std::size_t in = bvector_feature_width(ops_, input_dim_);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::size_t out = k < hidden_.size() ? hidden_[k] : 2;
    if (layers_[k].in_dim() != in || layers_[k].out_dim() != out ||
        !layers_[k].bias.value.same_shape(Mat(1, out))) {
      throw DimensionError("b-vector: layer " + std::to_string(k) + " has shape " +
                           shape_string(layers_[k].weight.value) + ", expected " +
                           std::to_string(in) + "x" + std::to_string(out));
    }
    in = out;
  }
}

std::vector<Param*> BVectorModel::parameters() {
  std::vector<Param*> out;
  for (Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Param*> BVectorModel::parameters() const {
  auto p = const_cast<BVectorModel*>(this)->parameters();
  return {p.begin(), p.end()};
}

Var BVectorModel::margins(Tape& tape, Var features) const {
  Var x = features;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    x = layers_[k].apply(tape, x);
    if (k + 1 < layers_.size()) x = relu(x);
  }
  return matmul(x, tape.constant(Mat::from_rows({{1.0}, {-1.0}})));
}

Var BVectorModel::score_pair(Tape& tape, const UtteranceSSEs& enroll, const UtteranceSSEs& test,
                             const ForwardOptions& options) const {
  if (enroll.dim() != input_dim_ || test.dim() != input_dim_) {
    throw DimensionError("bvector_score: model expects d=" + std::to_string(input_dim_));
  }
  Var e = tape.constant(enroll.segments());
  Var t = tape.constant(test.segments());
  if (options.training && dropout_rate_ > 0.0) {
    e = mul(e, tape.constant(dropout_mask(e.rows(), e.cols(), dropout_rate_,
                                          derive_seed(options.dropout_seed, 0))));
    t = mul(t, tape.constant(dropout_mask(t.rows(), t.cols(), dropout_rate_,
                                          derive_seed(options.dropout_seed, 1))));
  }

  Var a, b;
  if (pooling_ == PairPooling::kMean) {
    a = matmul(tape.constant(Mat(1, e.rows(), 1.0 / static_cast<double>(e.rows()))), e);
    b = matmul(tape.constant(Mat(1, t.rows(), 1.0 / static_cast<double>(t.rows()))), t);
  } else {
    const std::size_t s1 = e.rows(), s2 = t.rows();
    std::vector<std::size_t> left(s1 * s2), right(s1 * s2);
    for (std::size_t i = 0; i < s1; ++i)
      for (std::size_t j = 0; j < s2; ++j) {
        left[i * s2 + j] = i;
        right[i * s2 + j] = j;
      }
    a = gather_rows(e, std::move(left));
    b = gather_rows(t, std::move(right));
  }

  std::vector<Var> blocks;
  if (ops_ & kBVecMul) blocks.push_back(mul(a, b));
  if (ops_ & kBVecAdd) blocks.push_back(add(a, b));
  if (ops_ & kBVecSub) blocks.push_back(sub(a, b));
  if (ops_ & kBVecConcat) {
    blocks.push_back(a);
    blocks.push_back(b);
  }
  Var m = margins(tape, concat_columns(blocks));

  // Averaging the pair margins in ascending value order makes the pooled
  // score independent of pair order; with symmetric features swapping the
  // two utterances then reproduces the score bit for bit.
  const Mat& mv = m.value();
  std::vector<std::size_t> order(mv.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return mv(x, 0) < mv(y, 0); });
  return mean_all(gather_rows(m, std::move(order)));
}

BVectorModel init_bvector(std::uint32_t ops, std::size_t input_dim,
                          std::vector<std::size_t> hidden, std::uint64_t seed,
                          double dropout_rate, PairPooling pooling) {
  if (input_dim == 0) throw ArgumentError("init_bvector: zero input dim");
  Rng rng(seed);
  std::vector<Linear> layers;
  std::size_t in = bvector_feature_width(ops, input_dim);
  for (std::size_t k = 0; k <= hidden.size(); ++k) {
    const std::size_t out = k < hidden.size() ? hidden[k] : 2;
    if (out == 0) throw ArgumentError("init_bvector: zero hidden width");
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Mat w(in, out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    const std::string name = "mlp" + std::to_string(k);
    layers.push_back(Linear{Param(name + ".weight", std::move(w)), Param(name + ".bias", Mat(1, out))});
    in = out;
  }
  return BVectorModel(ops, input_dim, std::move(hidden), dropout_rate, pooling, std::move(layers));
}

double bvector_score(const BVectorModel& model, const UtteranceSSEs& enroll,
                     const UtteranceSSEs& test) {
  Tape tape;
  return model.score_pair(tape, enroll, test, {}).value().scalar_value();
}

}  // namespace gatsv
