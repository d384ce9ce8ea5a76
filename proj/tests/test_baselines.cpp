// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "gatsv/baselines.hpp"
#include "gatsv/errors.hpp"
#include "gatsv/train.hpp"
#include "support.hpp"

using namespace gatsv;
using gatsv::support::random_utterance;

namespace {
std::vector<double> v(std::initializer_list<double> x) { return x; }
}  // namespace

TEST(Cosine, Examples) {
  const auto a = v({0.3, -1.2, 2.0});
  EXPECT_NEAR(cosine_score(a, a), 1.0, 1e-15);
  EXPECT_EQ(cosine_score(v({1, 0}), v({0, 3})), 0.0);
  EXPECT_NEAR(cosine_score(v({1, 0}), v({1, 1})), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(cosine_score(v({0, 0}), v({1, 1})), DomainError);
  EXPECT_THROW(cosine_score(v({1, 0}), v({1, 1, 1})), DimensionError);
}

TEST(Cosine, ScaleInvariant) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = rng.gaussian();
    for (auto& x : b) x = rng.gaussian();
    auto scaled = a;
    const double lambda = 0.01 + 10.0 * rng.uniform();
    for (auto& x : scaled) x *= lambda;
    EXPECT_NEAR(cosine_score(scaled, b), cosine_score(a, b), 1e-12);
  }
}

TEST(Tta, DegenerateCases) {
  Rng rng(2);
  const auto e = random_utterance(rng, "e", 1, 5), t = random_utterance(rng, "t", 1, 5);
  EXPECT_EQ(tta_score(e, t), cosine_score(e.segment(0), t.segment(0)));
  const UtteranceSSEs same_e("e", Mat::from_rows({{1, 2}, {1, 2}, {1, 2}}));
  const UtteranceSSEs same_t("t", Mat::from_rows({{2, -1}, {2, -1}}));
  EXPECT_NEAR(tta_score(same_e, same_t), cosine_score(v({1, 2}), v({2, -1})), 1e-15);
}

TEST(Tta, MatchesDoubleLoopAndIgnoresOrder) {
  Rng rng(3);
  const auto e = random_utterance(rng, "e", 3, 6), t = random_utterance(rng, "t", 4, 6);
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const auto a = e.segment(i), b = t.segment(j);
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t k = 0; k < 6; ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
      }
      s += dot / std::sqrt(na * nb);
    }
  EXPECT_NEAR(tta_score(e, t), s / 12.0, 1e-12);
  Mat reversed(4, 6);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c) reversed(r, c) = t.segments()(3 - r, c);
  EXPECT_NEAR(tta_score(e, UtteranceSSEs("t", reversed)), tta_score(e, t), 1e-12);
}

TEST(BVector, Features) {
  EXPECT_EQ(bvector_features(v({1, 2}), v({3, 4}), kBVecMul), v({3, 8}));
  EXPECT_EQ(bvector_features(v({1, 2}), v({3, 4}), kBVecMul | kBVecAdd | kBVecSub).size(), 6u);
  EXPECT_EQ(bvector_features(v({1, 2}), v({3, 4}), kBVecConcat), v({1, 2, 3, 4}));
  EXPECT_EQ(bvector_feature_width(kBVecMul | kBVecConcat, 5), 15u);
  const auto ab = bvector_features(v({1.5, -2}), v({0.25, 4}), kBVecMul | kBVecAdd | kBVecSub);
  const auto ba = bvector_features(v({0.25, 4}), v({1.5, -2}), kBVecMul | kBVecAdd | kBVecSub);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ab[i], ba[i]);
  for (std::size_t i = 4; i < 6; ++i) EXPECT_EQ(ab[i], -ba[i]);
  EXPECT_THROW(bvector_features(v({1}), v({1, 2}), kBVecMul), DimensionError);
}

TEST(BVector, OpParsing) {
  EXPECT_EQ(parse_bvector_ops("mul,add"), kBVecMul | kBVecAdd);
  EXPECT_EQ(format_bvector_ops(parse_bvector_ops("concat,mul")), "mul,concat");
  EXPECT_THROW(parse_bvector_ops("mul,div"), ArgumentError);
  EXPECT_THROW(parse_bvector_ops(""), ArgumentError);
}

TEST(BVector, SymmetricOpsGiveSymmetricScore) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const BVectorModel m = init_bvector(kBVecMul | kBVecAdd, 5, {8, 4}, seed);
    const auto e = random_utterance(rng, "e", 3, 5), t = random_utterance(rng, "t", 4, 5);
    EXPECT_EQ(bvector_score(m, e, t), bvector_score(m, t, e));
  }
}

TEST(BVector, PairwiseScoreIsMeanOfPairMargins) {
  Rng rng(4);
  const BVectorModel m = init_bvector(kBVecMul | kBVecSub, 3, {6}, 4);
  const auto e = random_utterance(rng, "e", 2, 3), t = random_utterance(rng, "t", 3, 3);
  double total = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const UtteranceSSEs a("a", Mat::row_vector(e.segment(i))), b("b", Mat::row_vector(t.segment(j)));
      total += bvector_score(m, a, b);
    }
  EXPECT_NEAR(bvector_score(m, e, t), total / 6.0, 1e-12);
}

TEST(BVector, MarginIsLogProbabilityRatio) {
  Rng rng(5);
  const BVectorModel m = init_bvector(kBVecMul, 3, {4}, 5);
  const auto e = random_utterance(rng, "e", 1, 3), t = random_utterance(rng, "t", 1, 3);
  Tape tape;
  const auto f = bvector_features(e.segment(0), t.segment(0), kBVecMul);
  Var x = tape.constant(Mat::row_vector(f));
  Var z = m.layers()[1].apply(tape, relu(m.layers()[0].apply(tape, x)));
  const Mat p = softmax_rows(z.value());
  EXPECT_NEAR(bvector_score(m, e, t), std::log(p(0, 0)) - std::log(p(0, 1)), 1e-12);
}

TEST(BVector, TrainsThroughSharedLoop) {
  SynthConfig sc;
  sc.speakers = 6;
  sc.utterances_per_speaker = 3;
  sc.segments_per_utterance = 2;
  sc.dim = 4;
  const Corpus c = generate(sc);
  BVectorModel m = init_bvector(kBVecMul | kBVecAdd | kBVecSub, 4, {8, 4}, 1);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_M = 4;
  cfg.hard_negative_H = 2;
  const auto before = m.layers()[0].weight.value;
  const auto history = train(m, c, cfg);
  EXPECT_EQ(history.size(), 3u);
  EXPECT_NE(m.layers()[0].weight.value, before);
}

TEST(BVector, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  BVectorModel m = init_bvector(kBVecMul | kBVecAdd | kBVecSub | kBVecConcat, 3, {5, 4}, 6, 0.0);
  for (Param* p : m.parameters())
    for (double& x : p->value.data()) x += 0.1 * rng.gaussian();
  const auto e = random_utterance(rng, "e", 2, 3), t = random_utterance(rng, "t", 2, 3);
  EXPECT_LT(gatsv::support::tape_vs_fd(m.parameters(), [&](Tape& tape) {
              return m.score_pair(tape, e, t, {});
            }), 1e-4);
}

TEST(BVector, MeanPoolingUsesOnePair) {
  Rng rng(7);
  const BVectorModel m = init_bvector(kBVecMul, 3, {4}, 7, 0.2, PairPooling::kMean);
  const auto e = random_utterance(rng, "e", 3, 3), t = random_utterance(rng, "t", 2, 3);
  const UtteranceSSEs me("me", Mat::row_vector(mean_embedding(e)));
  const UtteranceSSEs mt("mt", Mat::row_vector(mean_embedding(t)));
  EXPECT_NEAR(bvector_score(m, e, t), bvector_score(m, me, mt), 1e-12);
}
