// SPDX-License-Identifier: Apache-2.0
//
// Batches, losses and the training loop.
//
// With S the M x M score matrix (row i: enroll x_{i,1}, column k: test
// x_{k,2}):
//
//   contrastive   L_c = -(1/M) sum_i [ s_ii - logsumexp_k s_ik ]
//   hard negative L_h = -(1/M) sum_i [ s_ii - logsumexp_{k in {i} + H_i} s_ik ]
//
// H_i holds the H off-diagonal columns of row i with the largest scores
// (ties to the lower index). With `strict` the positive is left out of the
// hard-negative denominator, so L_h can go negative.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gatsv/data.hpp"
#include "gatsv/gat.hpp"
#include "gatsv/tape.hpp"

namespace gatsv {

enum class LossKind : std::uint8_t { kContrastive, kHardNegative };

std::string loss_name(LossKind kind);
// "contrastive" or "hardneg"; ArgumentError otherwise.
LossKind parse_loss(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_M = 16;
  double lr0 = 0.001;
  double weight_decay = 1e-4;
  double dropout = 0.2;
  std::size_t hard_negative_H = 5;
  LossKind loss = LossKind::kHardNegative;
  bool strict_hardneg = false;
  std::uint64_t seed = 1;

  // ArgumentError on batch_M = 0, negative rates, dropout outside [0, 1),
  // or (for the hard-negative loss) H outside [1, batch_M - 1].
  // epochs = 0 is allowed and trains nothing.
  void validate() const;
};

// Sets epochs 200, batch_M 350, lr0 0.001, dropout 0.2, weight decay 1e-4.
void apply_paper_preset(TrainConfig& config);

struct TrainBatch {
  std::vector<std::string> speakers;
  std::vector<UtteranceSSEs> first;   // x_{i,1}
  std::vector<UtteranceSSEs> second;  // x_{i,2}

  std::size_t size() const noexcept { return speakers.size(); }
};

// One epoch: speakers with at least two utterances are shuffled with a
// stream derived from (seed, epoch) and cut into floor(count / M) batches of
// M; each speaker contributes two distinct random utterances. DataError if
// fewer than M speakers are eligible.
std::vector<TrainBatch> make_epoch_batches(const Corpus& corpus, std::size_t M,
                                           std::uint64_t seed, std::size_t epoch);

// Seed of the dropout mask for pair (i, k) in a step.
std::uint64_t pair_dropout_seed(std::uint64_t step_seed, std::size_t i, std::size_t k,
                                std::size_t M);

// M x M matrix of pair scores on `tape`. With `training` set, pair (i, k)
// uses dropout seed pair_dropout_seed(step_seed, i, k, M).
Var score_matrix(Tape& tape, const PairScorer& scorer, const TrainBatch& batch,
                 bool training, std::uint64_t step_seed);

Var contrastive_loss(Var scores);
// ArgumentError unless 1 <= H <= M - 1.
Var hard_negative_loss(Var scores, std::size_t H, bool strict = false);
double contrastive_loss(const Mat& scores);
double hard_negative_loss(const Mat& scores, std::size_t H, bool strict = false);

// Column sets {i} + H_i per row, ascending, or H_i alone when strict.
std::vector<std::vector<std::size_t>> hard_negative_columns(const Mat& scores, std::size_t H,
                                                           bool strict);

// 0.5 lr0 (1 + cos(pi epoch / (epochs - 1))); lr0 for one-epoch runs.
// ArgumentError unless epoch < epochs.
double lr_at(std::size_t epoch, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainObserver {
  // Called after every optimizer step.
  std::function<void(std::size_t epoch, std::size_t batch, double loss)> on_step;
  std::function<void(const EpochLog&)> on_epoch;
};

// Trains `scorer` in place. Streams: batches from derive_seed(seed, 2),
// dropout from derive_seed(derive_seed(seed, 3), global step). TrainingError
// with epoch and batch on a non-finite loss.
std::vector<EpochLog> train(PairScorer& scorer, const Corpus& corpus, const TrainConfig& config,
                            const TrainObserver& observer = {});

struct GatTrainResult {
  GatModel model;
  std::vector<EpochLog> history;
};

// init_model(dims, derive_seed(seed, 1), dropout) followed by train().
GatTrainResult train_gat(const Corpus& corpus, std::vector<std::size_t> dims,
                         const TrainConfig& config, const TrainObserver& observer = {});

// "epoch<TAB>mean_loss<TAB>lr" per line.
void write_loss_log(std::ostream& out, const std::vector<EpochLog>& history);

}  // namespace gatsv
