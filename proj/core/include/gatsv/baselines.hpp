// SPDX-License-Identifier: Apache-2.0
//
// Reference back-ends: cosine similarity on mean-pooled embeddings, cosine
// with test-time augmentation (mean over all segment pairs), and the
// b-vector MLP classifier.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gatsv/gat.hpp"
#include "gatsv/graph.hpp"

namespace gatsv {

// dot(a, b) / (|a| |b|). DimensionError on length mismatch, DomainError when
// either vector is zero.
double cosine_score(SseView a, SseView b);

// Cosine of the two utterances' mean-pooled embeddings ("without TTA").
double cosine_mean_score(const UtteranceSSEs& enroll, const UtteranceSSEs& test);

// Mean cosine over all S_enroll x S_test segment pairs ("with TTA").
double tta_score(const UtteranceSSEs& enroll, const UtteranceSSEs& test);

// Bit flags selecting b-vector feature blocks. Blocks are always laid out in
// the order mul, add, sub, concat; concat contributes [a, b].
enum BVectorOp : std::uint32_t {
  kBVecMul = 1u << 0,
  kBVecAdd = 1u << 1,
  kBVecSub = 1u << 2,
  kBVecConcat = 1u << 3,
};

// Parses "mul,add,sub,concat" (any non-empty subset). ArgumentError otherwise.
std::uint32_t parse_bvector_ops(const std::string& text);
std::string format_bvector_ops(std::uint32_t ops);
std::size_t bvector_feature_width(std::uint32_t ops, std::size_t dim);

std::vector<double> bvector_features(SseView a, SseView b, std::uint32_t ops);

// How utterance-level b-vector scores are formed.
enum class PairPooling : std::uint8_t {
  kPairwise = 0,  // mean over all segment pairs
  kMean = 1,      // one pair of mean-pooled embeddings
};

// MLP over b-vector features: hidden relu layers, then a 2-way output
// (same speaker, different speaker). The pair score is the logit margin
// z_same - z_diff, which equals log p_same - log p_diff.
class BVectorModel final : public PairScorer {
 public:
  BVectorModel() = default;
  BVectorModel(std::uint32_t ops, std::size_t input_dim, std::vector<std::size_t> hidden,
               double dropout_rate, PairPooling pooling, std::vector<Linear> layers);

  std::uint32_t ops() const noexcept { return ops_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  const std::vector<std::size_t>& hidden() const noexcept { return hidden_; }
  PairPooling pooling() const noexcept { return pooling_; }
  double dropout_rate() const noexcept override { return dropout_rate_; }
  const std::vector<Linear>& layers() const noexcept { return layers_; }

  std::vector<Param*> parameters() override;
  std::vector<const Param*> parameters() const;

  Var score_pair(Tape& tape, const UtteranceSSEs& enroll, const UtteranceSSEs& test,
                 const ForwardOptions& options) const override;

  // Per-row logit margins for a features matrix (rows x feature width).
  Var margins(Tape& tape, Var features) const;

 private:
  std::uint32_t ops_ = 0;
  std::size_t input_dim_ = 0;
  std::vector<std::size_t> hidden_;
  double dropout_rate_ = 0.0;
  PairPooling pooling_ = PairPooling::kPairwise;
  std::vector<Linear> layers_;
};

BVectorModel init_bvector(std::uint32_t ops, std::size_t input_dim,
                          std::vector<std::size_t> hidden, std::uint64_t seed,
                          double dropout_rate = 0.2,
                          PairPooling pooling = PairPooling::kPairwise);

// Inference-mode utterance score.
double bvector_score(const BVectorModel& model, const UtteranceSSEs& enroll,
                     const UtteranceSSEs& test);

}  // namespace gatsv
