// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "gatsv/baselines.hpp"
#include "gatsv/binary_io.hpp"
#include "gatsv/data.hpp"
#include "gatsv/errors.hpp"
#include "gatsv/metrics.hpp"

using namespace gatsv;

namespace {

SynthConfig tiny(std::uint64_t seed = 1) {
  SynthConfig c;
  c.speakers = 5;
  c.utterances_per_speaker = 3;
  c.segments_per_utterance = 2;
  c.dim = 4;
  c.seed = seed;
  return c;
}

double cosine_eer(const Corpus& test, const std::vector<Trial>& trials) {
  std::vector<ScoredTrial> s;
  for (const auto& t : trials) s.push_back({t.target, cosine_mean_score(test.at(t.enroll[0]), test.at(t.test))});
  return eer(TrialScores(s)).eer;
}

}  // namespace

TEST(Generate, NoiselessSpeakersAreIdentical) {
  SynthConfig c = tiny();
  c.within_noise = c.segment_noise = c.outlier_prob = 0.0;
  const Corpus corpus = generate(c);
  for (const auto& [spk, idx] : corpus.by_speaker()) {
    const Mat& ref = corpus.utterances()[idx[0]].segments();
    for (std::size_t i : idx) {
      const Mat& m = corpus.utterances()[i].segments();
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t k = 0; k < m.cols(); ++k) EXPECT_EQ(m(r, k), ref(0, k));
    }
  }
  const auto trials = make_trials(corpus, 10, 30, 1);
  EXPECT_EQ(cosine_eer(corpus, trials), 0.0);
}

TEST(Generate, DeterministicAndSeedSensitive) {
  EXPECT_EQ(encode_embeddings(generate(tiny(3))), encode_embeddings(generate(tiny(3))));
  EXPECT_NE(encode_embeddings(generate(tiny(3))), encode_embeddings(generate(tiny(4))));
}

TEST(Generate, ShapeAndIds) {
  const Corpus c = generate(tiny());
  EXPECT_EQ(c.size(), 15u);
  EXPECT_EQ(c.dim(), 4u);
  EXPECT_EQ(c.utterances()[0].id(), "spk0000-u00");
  EXPECT_EQ(c.speaker_of("spk0004-u02"), "spk0004");
  EXPECT_EQ(c.by_speaker().size(), 5u);
}

TEST(Generate, Validation) {
  SynthConfig c = tiny();
  c.outlier_prob = 1.5;
  EXPECT_THROW(generate(c), ArgumentError);
  c = tiny();
  c.segment_noise = -0.1;
  EXPECT_THROW(generate(c), ArgumentError);
  c = tiny();
  c.segments_per_utterance = 0;
  EXPECT_THROW(generate(c), ArgumentError);
}

TEST(Generate, MoreSegmentNoiseIsHarder) {
  double prev = -1.0;
  for (double sigma : {0.1, 0.4, 1.0, 2.5}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SynthConfig c;
      c.speakers = 20;
      c.utterances_per_speaker = 4;
      c.dim = 16;
      c.segment_noise = sigma;
      c.seed = seed;
      const Corpus corpus = generate(c);
      total += cosine_eer(corpus, make_trials(corpus, 100, 100, 9));
    }
    EXPECT_GE(total / 5.0, prev) << "sigma " << sigma;
    prev = total / 5.0;
  }
}

TEST(Split, LastSpeakersGoToTest) {
  const auto s = split_speakers(generate(tiny()), 2);
  EXPECT_EQ(s.train.size(), 9u);
  EXPECT_EQ(s.test.size(), 6u);
  EXPECT_EQ(s.test.split(), Split::kTest);
  EXPECT_TRUE(s.test.contains("spk0003-u00"));
  EXPECT_THROW(split_speakers(generate(tiny()), 5), DataError);
}

TEST(Trials, TwoSpeakersOneEach) {
  SynthConfig c = tiny();
  c.speakers = 2;
  const auto trials = make_trials(generate(c), 1, 1, 3);
  ASSERT_EQ(trials.size(), 2u);
  const Corpus corpus = generate(c);
  int targets = 0;
  for (const auto& t : trials) {
    targets += t.target;
    EXPECT_EQ(t.target, corpus.speaker_of(t.enroll[0]) == corpus.speaker_of(t.test));
  }
  EXPECT_EQ(targets, 1);
}

TEST(Trials, NoSelfPairsNoDuplicates) {
  const Corpus c = generate(tiny());
  const auto trials = make_trials(c, 15, 90, 4);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : trials) {
    EXPECT_NE(t.enroll[0], t.test);
    EXPECT_EQ(t.target, c.speaker_of(t.enroll[0]) == c.speaker_of(t.test));
    auto key = std::minmax(t.enroll[0], t.test);
    EXPECT_TRUE(seen.insert({key.first, key.second}).second);
  }
  // 5 speakers x C(3,2) targets is the whole supply.
  EXPECT_THROW(make_trials(c, 16, 1, 4), DataError);
  EXPECT_THROW(make_trials(c, 1, 91, 4), DataError);
  SynthConfig one = tiny();
  one.speakers = 1;
  EXPECT_THROW(make_trials(generate(one), 1, 0, 1), DataError);
}

TEST(Trials, ProtocolScale) {
  SynthConfig c;
  c.speakers = 40;
  c.utterances_per_speaker = 50;
  c.segments_per_utterance = 1;
  c.dim = 2;
  const auto trials = make_trials(generate(c), 18860, 18860, 5);
  EXPECT_EQ(trials.size(), 37720u);
}

TEST(Embeddings, RoundTripBitExact) {
  const Corpus c = generate(tiny(9));
  const auto path = std::filesystem::temp_directory_path() / "gatsv_rt.sse";
  write_embeddings(c, path);
  const Corpus back = read_embeddings(path);
  EXPECT_EQ(back, c);
  EXPECT_EQ(encode_embeddings(back), encode_embeddings(c));
  std::filesystem::remove(path);
}

TEST(Embeddings, TruncationIsFormatErrorEverywhere) {
  const std::string bytes = encode_embeddings(generate(tiny()));
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    std::string_view prefix(bytes.data(), cut);
    // A cut exactly at a record boundary is a valid, shorter corpus.
    try {
      decode_embeddings(prefix);
    } catch (const FormatError&) {
    }
  }
  EXPECT_THROW(decode_embeddings(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(decode_embeddings(bytes.substr(0, 4)), FormatError);
}

TEST(Embeddings, BadMagicAndDimMismatch) {
  std::string bytes = encode_embeddings(generate(tiny()));
  bytes[0] = 'X';
  EXPECT_THROW(decode_embeddings(bytes), FormatError);

  ByteWriter w;
  w.magic("SSEF1");
  w.u32(4);
  w.string("good");
  w.string("spk");
  w.matrix(Mat(2, 4, 1.0));
  w.string("odd-one");
  w.string("spk");
  w.matrix(Mat(2, 3, 1.0));
  try {
    decode_embeddings(w.bytes());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("odd-one"), std::string::npos);
  }
}

TEST(TrialFile, RoundTripAndErrors) {
  std::vector<Trial> trials{{true, {"a", "b"}, "c"}, {false, {"d"}, "e"}};
  std::stringstream io;
  write_trials(io, trials);
  EXPECT_EQ(io.str(), "1 a,b c\n0 d e\n");
  const auto back = read_trials(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].enroll, (std::vector<std::string>{"a", "b"}));
  for (const char* bad : {"1 a\n", "x a b\n", "1 a,,b c\n", "1 a b c\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(read_trials(in), FormatError) << bad;
  }
}
