// SPDX-License-Identifier: Apache-2.0
#include "gatsv/gat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gatsv/errors.hpp"
#include "gatsv/rng.hpp"

namespace gatsv {

namespace {

Linear make_linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Mat w(in, out);
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  return Linear{Param(name + ".weight", std::move(w)), Param(name + ".bias", Mat(1, out))};
}

void check_linear(const Linear& l, std::size_t in, std::size_t out, const char* what) {
  if (l.weight.value.rows() != in || l.weight.value.cols() != out || l.bias.value.rows() != 1 ||
      l.bias.value.cols() != out) {
    throw DimensionError(std::string("gat: ") + what + " has shape " +
                         shape_string(l.weight.value) + " + " + shape_string(l.bias.value) +
                         ", expected " + std::to_string(in) + "x" + std::to_string(out));
  }
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
}

}  // namespace

Var Linear::apply(Tape& tape, Var x) const {
  return add_row_broadcast(matmul(x, tape.parameter(weight)), tape.parameter(bias));
}

GatModel::GatModel(std::vector<std::size_t> dims, double dropout_rate, std::vector<GatLayer> layers,
                   Linear output)
    : dims_(std::move(dims)),
      dropout_rate_(dropout_rate),
      layers_(std::move(layers)),
      output_(std::move(output)) {
  check_rate(dropout_rate_);
  if (dims_.size() < 2 || layers_.size() + 1 != dims_.size()) {
    throw ArgumentError("gat: need K >= 1 layers and K + 1 dims");
  }
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::size_t in = dims_[k], out = dims_[k + 1];
    check_linear(layers_[k].phi, in, out, "phi");
    check_linear(layers_[k].psi, in, out, "psi");
    check_linear(layers_[k].theta_same, in, 1, "theta_same");
    check_linear(layers_[k].theta_cross, in, 1, "theta_cross");
  }
  check_linear(output_, dims_.back(), 1, "output");
}

void GatModel::set_dropout_rate(double rate) {
  check_rate(rate);
  dropout_rate_ = rate;
}

std::vector<Param*> GatModel::parameters() {
  std::vector<Param*> out;
  for (GatLayer& l : layers_) {
    for (Linear* lin : {&l.phi, &l.psi, &l.theta_same, &l.theta_cross}) {
      out.push_back(&lin->weight);
      out.push_back(&lin->bias);
    }
  }
  out.push_back(&output_.weight);
  out.push_back(&output_.bias);
  return out;
}

std::vector<const Param*> GatModel::parameters() const {
  auto mutable_params = const_cast<GatModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

Var GatModel::score_pair(Tape& tape, const UtteranceSSEs& enroll, const UtteranceSSEs& test,
                         const ForwardOptions& options) const {
  return score(tape, *this, build_trial_graph(enroll, test), options);
}

std::vector<std::size_t> default_dims(std::size_t input_dim) {
  return {input_dim, input_dim, std::max<std::size_t>(1, input_dim / 2),
          std::max<std::size_t>(1, input_dim / 4)};
}

GatModel init_model(std::vector<std::size_t> dims, std::uint64_t seed, double dropout_rate) {
  if (dims.size() < 2) {
    throw ArgumentError("init_model: need at least two dims (input and one layer)");
  }
  for (std::size_t d : dims) {
    if (d == 0) throw ArgumentError("init_model: zero width in dims");
  }
  check_rate(dropout_rate);
  Rng rng(seed);
  std::vector<GatLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::string prefix = "layer" + std::to_string(k) + ".";
    GatLayer layer;
    layer.phi = make_linear(prefix + "phi", dims[k], dims[k + 1], rng);
    layer.psi = make_linear(prefix + "psi", dims[k], dims[k + 1], rng);
    layer.theta_same = make_linear(prefix + "theta_same", dims[k], 1, rng);
    layer.theta_cross = make_linear(prefix + "theta_cross", dims[k], 1, rng);
    layers.push_back(std::move(layer));
  }
  Linear output = make_linear("output", dims.back(), 1, rng);
  return GatModel(std::move(dims), dropout_rate, std::move(layers), std::move(output));
}

Var attention_logits(Tape& tape, const GatLayer& layer, Var h, std::span<const Membership> tags) {
  const std::size_t n = h.rows();
  if (h.cols() != layer.in_dim()) {
    throw DimensionError("attention_logits: node width " + std::to_string(h.cols()) +
                         ", layer expects " + std::to_string(layer.in_dim()));
  }
  if (tags.size() != n) {
    throw DimensionError("attention_logits: membership size disagrees with node count");
  }
  // Row u * n + v of `pairs` is h_u * h_v. Hadamard products commute, so rows
  // (u, v) and (v, u) are bitwise identical and so are their logits.
  std::vector<std::size_t> left(n * n), right(n * n);
  std::vector<std::uint8_t> same(n * n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      left[u * n + v] = u;
      right[u * n + v] = v;
      same[u * n + v] = tags[u] == tags[v] ? 1 : 0;
    }
  }
  Var pairs = mul(gather_rows(h, std::move(left)), gather_rows(h, std::move(right)));
  Var same_logits = layer.theta_same.apply(tape, pairs);
  Var cross_logits = layer.theta_cross.apply(tape, pairs);
  return reshape(select(same, same_logits, cross_logits), n, n);
}

Var attention_weights(Var logits) {
  if (logits.rows() != logits.cols()) {
    throw DimensionError("attention_weights: logits must be square, got " +
                         shape_string(logits.value()));
  }
  return softmax_rows(logits);
}

Var aggregate(Var alpha, Var h) { return matmul(alpha, h); }

Var layer_forward(Tape& tape, const GatLayer& layer, Var h, std::span<const Membership> tags) {
  Var alpha = attention_weights(attention_logits(tape, layer, h, tags));
  Var m = aggregate(alpha, h);
  return relu(add(layer.phi.apply(tape, m), layer.psi.apply(tape, h)));
}

Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
  check_rate(rate);
  Mat mask(rows, cols);
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.data()) v = rng.bernoulli(rate) ? 0.0 : keep_scale;
  return mask;
}

Var score(Tape& tape, const GatModel& model, const TrialGraph& graph,
          const ForwardOptions& options) {
  if (graph.dim() != model.dims().front()) {
    throw DimensionError("score: graph node dim " + std::to_string(graph.dim()) +
                         ", model expects " + std::to_string(model.dims().front()));
  }
  Var h = tape.constant(graph.nodes());
  if (options.training && model.dropout_rate() > 0.0) {
    h = mul(h, tape.constant(dropout_mask(graph.node_count(), graph.dim(), model.dropout_rate(),
                                          options.dropout_seed)));
  }
  for (const GatLayer& layer : model.layers()) {
    h = layer_forward(tape, layer, h, graph.membership());
  }
  return mean_all(model.output().apply(tape, h));
}

double score(const GatModel& model, const TrialGraph& graph) {
  Tape tape;
  return score(tape, model, graph).value().scalar_value();
}

std::vector<AttentionMap> attention_maps(const GatModel& model, const TrialGraph& graph) {
  if (graph.dim() != model.dims().front()) {
    throw DimensionError("attention_maps: graph dim disagrees with model");
  }
  Tape tape;
  Var h = tape.constant(graph.nodes());
  std::vector<AttentionMap> maps;
  for (const GatLayer& layer : model.layers()) {
    Var logits = attention_logits(tape, layer, h, graph.membership());
    Var alpha = attention_weights(logits);
    maps.push_back({logits.value(), alpha.value()});
    Var m = aggregate(alpha, h);
    h = relu(add(layer.phi.apply(tape, m), layer.psi.apply(tape, h)));
  }
  return maps;
}

}  // namespace gatsv
