// SPDX-License-Identifier: Apache-2.0
//
// Graph attention scoring network.
//
// For a trial graph with node matrix h0 (n x d0) and K layers:
//
//   logits_k[u][v] = theta_same(h_u * h_v)   if u and v come from one utterance
//                    theta_cross(h_u * h_v)  otherwise            (* = Hadamard)
//   alpha_k        = row softmax(logits_k)   over all n nodes, self included
//   m_k            = alpha_k h_{k-1}
//   h_k            = relu(phi(m_k) + psi(h_{k-1}))
//   score          = mean_u (h_K W_out + b_out)_u
//
// phi, psi, theta_same, theta_cross and the output projection are single
// affine maps. In training mode inverted dropout is applied to h0 only.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gatsv/graph.hpp"
#include "gatsv/numeric.hpp"
#include "gatsv/tape.hpp"

namespace gatsv {

// y = x W + b, with W: in x out and b: 1 x out.
struct Linear {
  Param weight;
  Param bias;

  std::size_t in_dim() const noexcept { return weight.value.rows(); }
  std::size_t out_dim() const noexcept { return weight.value.cols(); }
  Var apply(Tape& tape, Var x) const;
};

struct GatLayer {
  Linear phi;          // aggregated message m_u
  Linear psi;          // residual path from h_u
  Linear theta_same;   // attention logit, same-utterance pairs (and u == v)
  Linear theta_cross;  // attention logit, cross-utterance pairs

  std::size_t in_dim() const noexcept { return phi.in_dim(); }
  std::size_t out_dim() const noexcept { return phi.out_dim(); }
};

struct ForwardOptions {
  bool training = false;
  // Seeds the input dropout mask when `training` is set.
  std::uint64_t dropout_seed = 0;
};

// Anything that maps an (enroll, test) utterance pair to a scalar score on a
// tape, so the training loop can drive different back-ends.
class PairScorer {
 public:
  virtual ~PairScorer() = default;

  virtual Var score_pair(Tape& tape, const UtteranceSSEs& enroll, const UtteranceSSEs& test,
                         const ForwardOptions& options) const = 0;
  virtual std::vector<Param*> parameters() = 0;
  virtual double dropout_rate() const noexcept = 0;
};

class GatModel final : public PairScorer {
 public:
  GatModel() = default;
  // Validates that layer i maps dims[i] -> dims[i + 1] and the output
  // projection maps dims.back() -> 1.
  GatModel(std::vector<std::size_t> dims, double dropout_rate, std::vector<GatLayer> layers,
           Linear output);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  double dropout_rate() const noexcept override { return dropout_rate_; }
  void set_dropout_rate(double rate);
  const std::vector<GatLayer>& layers() const noexcept { return layers_; }
  const Linear& output() const noexcept { return output_; }

  // Fixed order: per layer phi.{weight,bias}, psi.*, theta_same.*,
  // theta_cross.*; then output.{weight,bias}. The checkpoint format uses it.
  std::vector<Param*> parameters() override;
  std::vector<const Param*> parameters() const;

  Var score_pair(Tape& tape, const UtteranceSSEs& enroll, const UtteranceSSEs& test,
                 const ForwardOptions& options) const override;

 private:
  std::vector<std::size_t> dims_;
  double dropout_rate_ = 0.0;
  std::vector<GatLayer> layers_;
  Linear output_;
};

// Hidden widths used when none are configured: [d, d, d/2, d/4] (K = 3).
std::vector<std::size_t> default_dims(std::size_t input_dim);

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, drawn in
// parameters() order from Rng(seed). ArgumentError for fewer than two dims,
// a zero width, or a dropout rate outside [0, 1).
GatModel init_model(std::vector<std::size_t> dims, std::uint64_t seed, double dropout_rate = 0.2);

// logits[u][v] from the layer's theta maps; exactly symmetric.
Var attention_logits(Tape& tape, const GatLayer& layer, Var h, std::span<const Membership> tags);
// Row softmax over the full node set.
Var attention_weights(Var logits);
// m = alpha h.
Var aggregate(Var alpha, Var h);
Var layer_forward(Tape& tape, const GatLayer& layer, Var h, std::span<const Membership> tags);

Var score(Tape& tape, const GatModel& model, const TrialGraph& graph,
          const ForwardOptions& options = {});
// Inference-mode score on a private tape.
double score(const GatModel& model, const TrialGraph& graph);

// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
// 1 / (1 - rate). Drawn row-major from Rng(seed).
Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed);

struct AttentionMap {
  Mat logits;
  Mat alpha;
};

// Per-layer attention of an inference-mode forward pass.
std::vector<AttentionMap> attention_maps(const GatModel& model, const TrialGraph& graph);

}  // namespace gatsv
