// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gatsv/errors.hpp"
#include "gatsv/train.hpp"
#include "support.hpp"

using namespace gatsv;
using gatsv::support::random_mat;
using gatsv::support::random_utterance;

namespace {

TrainBatch random_batch(Rng& rng, std::size_t M, std::size_t S, std::size_t d) {
  TrainBatch b;
  for (std::size_t i = 0; i < M; ++i) {
    b.speakers.push_back("s" + std::to_string(i));
    b.first.push_back(random_utterance(rng, "a" + std::to_string(i), S, d));
    b.second.push_back(random_utterance(rng, "b" + std::to_string(i), S, d));
  }
  return b;
}

// Oracle for one row: brute-force selection of the H largest negatives.
double hard_negative_oracle(const Mat& s, std::size_t H) {
  const std::size_t M = s.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<double> neg;
    for (std::size_t k = 0; k < M; ++k)
      if (k != i) neg.push_back(s(i, k));
    std::sort(neg.rbegin(), neg.rend());
    double denom = std::exp(s(i, i));
    for (std::size_t h = 0; h < H; ++h) denom += std::exp(neg[h]);
    total -= std::log(std::exp(s(i, i)) / denom);
  }
  return total / static_cast<double>(M);
}

Corpus small_corpus(std::size_t speakers, std::size_t utts, std::uint64_t seed) {
  SynthConfig c;
  c.speakers = speakers;
  c.utterances_per_speaker = utts;
  c.segments_per_utterance = 3;
  c.dim = 4;
  c.seed = seed;
  return generate(c);
}

}  // namespace

TEST(Losses, UniformScores) {
  EXPECT_NEAR(contrastive_loss(Mat(4, 4, 0.7)), std::log(4.0), 1e-12);
  EXPECT_NEAR(hard_negative_loss(Mat(4, 4, -1.3), 2), std::log(3.0), 1e-12);
  EXPECT_EQ(contrastive_loss(Mat::scalar(5.0)), 0.0);
}

TEST(Losses, SaturatedDiagonal) {
  Mat s(3, 3);
  for (std::size_t i = 0; i < 3; ++i) s(i, i) = 50.0;
  EXPECT_LT(contrastive_loss(s), 1e-9);
  EXPECT_GE(contrastive_loss(s), 0.0);
}

TEST(Losses, HardNegativeSelectsTopH) {
  const Mat s = Mat::from_rows({{0, 5, 1, -3}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  // Row 0 contributes -log(1 / (1 + e^5)); rows 1..3 are uniform over 2.
  const double expected = (std::log(1.0 + std::exp(5.0)) + 3.0 * std::log(2.0)) / 4.0;
  EXPECT_NEAR(hard_negative_loss(s, 1), expected, 1e-12);
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Mat r = random_mat(rng, 6, 6, 2.0);
    for (std::size_t H = 1; H <= 5; ++H) EXPECT_NEAR(hard_negative_loss(r, H), hard_negative_oracle(r, H), 1e-12);
  }
}

TEST(Losses, FullHardNegativeEqualsContrastiveExactly) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Mat s = random_mat(rng, 7, 7, 3.0);
    EXPECT_EQ(hard_negative_loss(s, 6), contrastive_loss(s));
  }
}

TEST(Losses, ShiftInvariantAndNonNegative) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Mat s = random_mat(rng, 5, 5, 2.0);
    Mat shifted = s;
    for (double& v : shifted.data()) v -= 12.5;
    EXPECT_NEAR(contrastive_loss(s), contrastive_loss(shifted), 1e-9);
    EXPECT_NEAR(hard_negative_loss(s, 2), hard_negative_loss(shifted, 2), 1e-9);
    EXPECT_GE(contrastive_loss(s), 0.0);
    EXPECT_GE(hard_negative_loss(s, 2), 0.0);
  }
}

TEST(Losses, HardNegativeNonIncreasingInPositive) {
  Rng rng(4);
  Mat s = random_mat(rng, 5, 5);
  double prev = hard_negative_loss(s, 2);
  for (int step = 0; step < 20; ++step) {
    s(2, 2) += 0.25;
    const double now = hard_negative_loss(s, 2);
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(Losses, StrictFormDropsPositive) {
  const Mat s = Mat::from_rows({{3, 0}, {0, 3}});
  // -log(e^3 / e^0) = -3: the literal form can go negative.
  EXPECT_NEAR(hard_negative_loss(s, 1, true), -3.0, 1e-12);
  EXPECT_GT(hard_negative_loss(s, 1, false), 0.0);
}

TEST(Losses, HardNegativeRange) {
  EXPECT_THROW(hard_negative_loss(Mat(4, 4), 0), ArgumentError);
  EXPECT_THROW(hard_negative_loss(Mat(4, 4), 4), ArgumentError);
  EXPECT_THROW(contrastive_loss(Mat(2, 3)), DimensionError);
}

TEST(Schedule, CosineValues) {
  TrainConfig c;
  c.epochs = 201;
  EXPECT_EQ(lr_at(0, c), 0.001);
  EXPECT_NEAR(lr_at(100, c), 0.0005, 1e-15);
  EXPECT_NEAR(lr_at(200, c), 0.0, 1e-18);
  double prev = lr_at(0, c);
  for (std::size_t e = 1; e < 201; ++e) {
    EXPECT_LE(lr_at(e, c), prev);
    prev = lr_at(e, c);
  }
  c.epochs = 1;
  EXPECT_EQ(lr_at(0, c), 0.001);
  EXPECT_THROW(lr_at(1, c), ArgumentError);
}

TEST(ScoreMatrix, OneByOneIsPositivePair) {
  Rng rng(5);
  GatModel m = init_model({4, 4, 2}, 5, 0.0);
  const TrainBatch b = random_batch(rng, 1, 3, 4);
  Tape tape;
  const Mat s = score_matrix(tape, m, b, false, 0).value();
  ASSERT_EQ(s.rows(), 1u);
  EXPECT_EQ(s(0, 0), score(m, build_trial_graph(b.first[0], b.second[0])));
}

TEST(ScoreMatrix, ZeroOutputWeightGivesBias) {
  Rng rng(6);
  GatModel base = init_model({4, 4, 2}, 6, 0.2);
  Linear out{Param("output.weight", Mat(2, 1)), Param("output.bias", Mat::scalar(-0.375))};
  GatModel m(base.dims(), 0.2, base.layers(), out);
  Tape tape;
  const Mat s = score_matrix(tape, m, random_batch(rng, 3, 2, 4), true, 9).value();
  for (double v : s.data()) EXPECT_EQ(v, -0.375);
}

TEST(ScoreMatrix, EntriesMatchIndividualScoresWithSameMasks) {
  Rng rng(7);
  GatModel m = init_model({4, 4, 2}, 7, 0.3);
  const TrainBatch b = random_batch(rng, 3, 3, 4);
  Tape tape;
  const Mat s = score_matrix(tape, m, b, true, 42).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      Tape single;
      ForwardOptions opts{true, pair_dropout_seed(42, i, k, 3)};
      EXPECT_EQ(s(i, k), score(single, m, build_trial_graph(b.first[i], b.second[k]), opts)
                             .value()
                             .scalar_value());
    }
}

TEST(ScoreMatrix, LossGradientsMatchFiniteDifferences) {
  Rng rng(8);
  GatModel m = init_model({4, 4, 2}, 8, 0.0);
  for (Param* p : m.parameters())
    for (double& v : p->value.data()) v += 0.1 * rng.gaussian();
  const TrainBatch b = random_batch(rng, 2, 2, 4);
  EXPECT_LT(gatsv::support::tape_vs_fd(m.parameters(), [&](Tape& t) {
              return contrastive_loss(score_matrix(t, m, b, false, 0));
            }), 1e-4);
  EXPECT_LT(gatsv::support::tape_vs_fd(m.parameters(), [&](Tape& t) {
              return hard_negative_loss(score_matrix(t, m, b, false, 0), 1);
            }), 1e-4);
}

TEST(Batches, DeterministicDistinctSpeakers) {
  const Corpus c = small_corpus(10, 3, 1);
  const auto a = make_epoch_batches(c, 4, 77, 0), b = make_epoch_batches(c, 4, 77, 0);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].speakers, b[i].speakers);
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second, b[i].second);
  }
  std::set<std::string> seen;
  for (const auto& batch : a) {
    std::set<std::string> in_batch(batch.speakers.begin(), batch.speakers.end());
    EXPECT_EQ(in_batch.size(), batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      EXPECT_NE(batch.first[i].id(), batch.second[i].id());
      EXPECT_EQ(c.speaker_of(batch.first[i].id()), batch.speakers[i]);
      EXPECT_EQ(c.speaker_of(batch.second[i].id()), batch.speakers[i]);
      EXPECT_TRUE(seen.insert(batch.speakers[i]).second);
    }
  }
  const auto other = make_epoch_batches(c, 4, 77, 1);
  EXPECT_NE(other[0].speakers, a[0].speakers);
}

TEST(Batches, ExactlyMSpeakersGivesOneBatch) {
  EXPECT_EQ(make_epoch_batches(small_corpus(5, 2, 2), 5, 1, 0).size(), 1u);
  EXPECT_THROW(make_epoch_batches(small_corpus(5, 2, 2), 6, 1, 0), DataError);
  EXPECT_THROW(make_epoch_batches(small_corpus(8, 1, 2), 2, 1, 0), DataError);
}

TEST(Train, ZeroEpochsLeavesInit) {
  const Corpus c = small_corpus(6, 3, 3);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_M = 4;
  cfg.hard_negative_H = 2;
  const auto r = train_gat(c, {4, 4, 2}, cfg);
  EXPECT_TRUE(r.history.empty());
  const GatModel fresh = init_model({4, 4, 2}, derive_seed(cfg.seed, 1), cfg.dropout);
  const auto a = r.model.parameters(), b = fresh.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);
}

// Single initialisations can start well above ln M; the median cannot.
TEST(Train, FirstBatchLossNearLogM) {
  std::vector<double> losses;
  for (std::uint64_t s = 1; s <= 12; ++s) {
    SynthConfig sc;
    sc.speakers = 8;
    sc.seed = s;
    const Corpus c = generate(sc);
    GatModel m = init_model(default_dims(sc.dim), s, 0.2);
    const auto batches = make_epoch_batches(c, 8, 1, 0);
    Tape tape;
    losses.push_back(
        contrastive_loss(score_matrix(tape, m, batches[0], true, 3)).value().scalar_value());
  }
  std::sort(losses.begin(), losses.end());
  const double median = 0.5 * (losses[5] + losses[6]);
  EXPECT_NEAR(median, std::log(8.0), 0.3 * std::log(8.0));
}

TEST(Train, ReproducibleAndLogged) {
  const Corpus c = small_corpus(8, 3, 5);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_M = 4;
  cfg.hard_negative_H = 2;
  cfg.lr0 = 0.01;
  const auto a = train_gat(c, {4, 4, 2}, cfg), b = train_gat(c, {4, 4, 2}, cfg);
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.history[i].mean_loss, b.history[i].mean_loss);
  const auto pa = a.model.parameters(), pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  std::ostringstream log;
  write_loss_log(log, a.history);
  std::istringstream in(log.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 2);
    ++lines;
  }
  EXPECT_EQ(lines, 3);
}

TEST(Train, ContrastiveLossDropsOnTrainingData) {
  // Noise-free speakers: the only thing to learn is identity, which the
  // network can fit; the loss must at least halve.
  SynthConfig sc;
  sc.speakers = 8;
  sc.utterances_per_speaker = 4;
  sc.segments_per_utterance = 3;
  sc.dim = 8;
  sc.within_noise = 0.0;
  sc.segment_noise = 0.0;
  sc.outlier_prob = 0.0;
  const Corpus c = generate(sc);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_M = 8;
  cfg.loss = LossKind::kContrastive;
  cfg.lr0 = 0.01;
  cfg.dropout = 0.0;
  const auto r = train_gat(c, default_dims(8), cfg);
  EXPECT_LT(r.history.back().mean_loss, r.history.front().mean_loss / 2.0);
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.batch_M = 4;
  cfg.hard_negative_H = 4;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg.loss = LossKind::kContrastive;
  EXPECT_NO_THROW(cfg.validate());
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  EXPECT_THROW(parse_loss("triplet"), ArgumentError);
  EXPECT_EQ(parse_loss("hardneg"), LossKind::kHardNegative);
}

TEST(Train, PaperPreset) {
  TrainConfig cfg;
  apply_paper_preset(cfg);
  EXPECT_EQ(cfg.epochs, 200u);
  EXPECT_EQ(cfg.batch_M, 350u);
  EXPECT_EQ(cfg.lr0, 0.001);
  EXPECT_EQ(cfg.dropout, 0.2);
  EXPECT_EQ(cfg.weight_decay, 1e-4);
}
