// SPDX-License-Identifier: Apache-2.0
#include "gatsv/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gatsv/adam.hpp"
#include "gatsv/errors.hpp"
#include "gatsv/rng.hpp"

namespace gatsv {

std::string loss_name(LossKind kind) {
  return kind == LossKind::kContrastive ? "contrastive" : "hardneg";
}

LossKind parse_loss(const std::string& name) {
  if (name == "contrastive") return LossKind::kContrastive;
  if (name == "hardneg") return LossKind::kHardNegative;
  throw ArgumentError("unknown loss '" + name + "' (expected contrastive or hardneg)");
}

void TrainConfig::validate() const {
  if (batch_M == 0) throw ArgumentError("batch_M must be >= 1");
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ArgumentError("lr0 must be finite and >= 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ArgumentError("weight_decay must be finite and >= 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must be in [0, 1)");
  if (loss == LossKind::kHardNegative &&
      (hard_negative_H < 1 || hard_negative_H + 1 > batch_M)) {
    throw ArgumentError("H must be in [1, M - 1], got H=" + std::to_string(hard_negative_H) +
                        " with M=" + std::to_string(batch_M));
  }
}

void apply_paper_preset(TrainConfig& config) {
  config.epochs = 200;
  config.batch_M = 350;
  config.lr0 = 0.001;
  config.dropout = 0.2;
  config.weight_decay = 1e-4;
}

std::vector<TrainBatch> make_epoch_batches(const Corpus& corpus, std::size_t M,
                                           std::uint64_t seed, std::size_t epoch) {
  if (M == 0) throw ArgumentError("batch size M must be >= 1");
  auto groups = corpus.by_speaker();
  std::erase_if(groups, [](const auto& g) { return g.second.size() < 2; });
  if (groups.size() < M) {
    throw DataError("need " + std::to_string(M) + " speakers with two or more utterances, have " +
                    std::to_string(groups.size()));
  }
  Rng rng(derive_seed(seed, epoch));
  rng.shuffle(std::span(groups));

  std::vector<TrainBatch> batches;
  for (std::size_t start = 0; start + M <= groups.size(); start += M) {
    TrainBatch b;
    for (std::size_t i = start; i < start + M; ++i) {
      const auto& idx = groups[i].second;
      const std::size_t a = rng.below(idx.size());
      std::size_t c = rng.below(idx.size() - 1);
      if (c >= a) ++c;
      b.speakers.push_back(groups[i].first);
      b.first.push_back(corpus.utterances()[idx[a]]);
      b.second.push_back(corpus.utterances()[idx[c]]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::uint64_t pair_dropout_seed(std::uint64_t step_seed, std::size_t i, std::size_t k,
                                std::size_t M) {
  return derive_seed(step_seed, static_cast<std::uint64_t>(i) * M + k);
}

Var score_matrix(Tape& tape, const PairScorer& scorer, const TrainBatch& batch, bool training,
                 std::uint64_t step_seed) {
  const std::size_t M = batch.size();
  if (M == 0 || batch.second.size() != M || batch.first.size() != M) {
    throw ArgumentError("score_matrix: malformed batch");
  }
  std::vector<Var> rows;
  rows.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<Var> row;
    row.reserve(M);
    for (std::size_t k = 0; k < M; ++k) {
      ForwardOptions opts{training, pair_dropout_seed(step_seed, i, k, M)};
      row.push_back(scorer.score_pair(tape, batch.first[i], batch.second[k], opts));
    }
    rows.push_back(concat_columns(row));
  }
  return concat_rows(rows);
}

namespace {

void require_square(const Mat& s, const char* what) {
  if (s.rows() == 0 || s.rows() != s.cols()) {
    throw DimensionError(std::string(what) + ": score matrix must be square, got " +
                         shape_string(s));
  }
}

Var diagonal(Var scores) {
  std::vector<std::vector<std::size_t>> cols(scores.rows());
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = {i};
  return gather_columns_per_row(scores, std::move(cols));
}

}  // namespace

Var contrastive_loss(Var scores) {
  require_square(scores.value(), "contrastive_loss");
  return mean_all(sub(logsumexp_rows(scores), diagonal(scores)));
}

std::vector<std::vector<std::size_t>> hard_negative_columns(const Mat& scores, std::size_t H,
                                                           bool strict) {
  require_square(scores, "hard_negative_loss");
  const std::size_t M = scores.rows();
  if (H < 1 || H + 1 > M) {
    throw ArgumentError("hard_negative_loss: H must be in [1, M - 1], got H=" + std::to_string(H) +
                        " with M=" + std::to_string(M));
  }
  std::vector<std::vector<std::size_t>> out(M);
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<std::size_t> negatives;
    for (std::size_t k = 0; k < M; ++k)
      if (k != i) negatives.push_back(k);
    std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
      return scores(i, a) > scores(i, b);
    });
    negatives.resize(H);
    if (!strict) negatives.push_back(i);
    std::sort(negatives.begin(), negatives.end());
    out[i] = std::move(negatives);
  }
  return out;
}

Var hard_negative_loss(Var scores, std::size_t H, bool strict) {
  auto cols = hard_negative_columns(scores.value(), H, strict);
  Var picked = gather_columns_per_row(scores, std::move(cols));
  return mean_all(sub(logsumexp_rows(picked), diagonal(scores)));
}

double contrastive_loss(const Mat& scores) {
  Tape tape;
  return contrastive_loss(tape.constant(scores)).value().scalar_value();
}

double hard_negative_loss(const Mat& scores, std::size_t H, bool strict) {
  Tape tape;
  return hard_negative_loss(tape.constant(scores), H, strict).value().scalar_value();
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  if (epoch >= config.epochs) {
    throw ArgumentError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(config.epochs) + ")");
  }
  if (config.epochs == 1) return config.lr0;
  const double phase =
      std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
  return 0.5 * config.lr0 * (1.0 + std::cos(phase));
}

std::vector<EpochLog> train(PairScorer& scorer, const Corpus& corpus, const TrainConfig& config,
                            const TrainObserver& observer) {
  config.validate();
  const auto params = scorer.parameters();
  Adam adam(params, AdamOptions{.weight_decay = config.weight_decay});
  const std::uint64_t batch_seed = derive_seed(config.seed, 2);
  const std::uint64_t dropout_seed = derive_seed(config.seed, 3);

  std::vector<EpochLog> history;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(epoch, config);
    const auto batches = make_epoch_batches(corpus, config.batch_M, batch_seed, epoch);
    double total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b, ++step) {
      for (Param* p : params) p->zero_grad();
      Tape tape;
      Var s = score_matrix(tape, scorer, batches[b], true, derive_seed(dropout_seed, step));
      Var loss = config.loss == LossKind::kContrastive
                     ? contrastive_loss(s)
                     : hard_negative_loss(s, config.hard_negative_H, config.strict_hardneg);
      const double value = loss.value().scalar_value();
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b));
      }
      tape.backward(loss);
      try {
        adam.step(lr);
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                            ": " + e.what());
      }
      total += value;
      if (observer.on_step) observer.on_step(epoch, b, value);
    }
    EpochLog log{epoch, total / static_cast<double>(batches.size()), lr};
    history.push_back(log);
    if (observer.on_epoch) observer.on_epoch(log);
  }
  return history;
}

GatTrainResult train_gat(const Corpus& corpus, std::vector<std::size_t> dims,
                         const TrainConfig& config, const TrainObserver& observer) {
  config.validate();
  GatTrainResult result{init_model(std::move(dims), derive_seed(config.seed, 1), config.dropout),
                        {}};
  result.history = train(result.model, corpus, config, observer);
  return result;
}

void write_loss_log(std::ostream& out, const std::vector<EpochLog>& history) {
  std::ostringstream buf;
  buf.precision(17);
  for (const EpochLog& e : history) buf << e.epoch << '\t' << e.mean_loss << '\t' << e.lr << '\n';
  out << buf.str();
}

}  // namespace gatsv
