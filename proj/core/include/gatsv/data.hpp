// SPDX-License-Identifier: Apache-2.0
//
// Synthetic SSE corpora, trial lists and their file formats.
//
// Generation, all draws from one Rng(seed) in this order:
//   1. per speaker: centroid = normalize(N(0, I_d))
//   2. per speaker, per utterance:
//        u = normalize(centroid + (sigma_w / sqrt(d)) N(0, I_d))
//        per segment: with probability outlier_prob (one uniform draw)
//          segment = centroid + outlier_scale * sigma_s N(0, I_d)
//        otherwise
//          segment = u + sigma_s N(0, I_d)
// The utterance offset is scaled so its expected squared norm is sigma_w^2,
// comparable to the unit-norm centroid; segment noise is sigma_s per
// coordinate.
//
// SSEF1 embedding file:
//   "SSEF1", u32 d, then until end of file records of
//   (string utterance_id, string speaker_id, matrix S x d)
// where strings are u32 byte length + UTF-8 and matrices are u32 S, u32 d,
// then S*d little-endian f64 values row-major.
//
// Trial list: text lines "label enroll test" with label 1 (target) or 0;
// enroll may be a comma-joined list of utterance ids.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gatsv/graph.hpp"

namespace gatsv {

struct SynthConfig {
  std::size_t speakers = 80;
  std::size_t utterances_per_speaker = 10;
  std::size_t segments_per_utterance = 10;
  std::size_t dim = 32;
  double within_noise = 0.3;
  double segment_noise = 0.4;
  double outlier_prob = 0.2;
  double outlier_scale = 5.0;
  std::uint64_t seed = 1;

  // ArgumentError on zero counts, negative noise or outlier_prob outside
  // [0, 1].
  void validate() const;
};

enum class Split : std::uint8_t { kTrain, kTest };

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(Split split) : split_(split) {}

  Split split() const noexcept { return split_; }
  void set_split(Split split) noexcept { split_ = split; }

  // DataError on a duplicate id or a d different from earlier utterances.
  void add(UtteranceSSEs utterance, std::string speaker_id);

  std::size_t size() const noexcept { return utterances_.size(); }
  bool empty() const noexcept { return utterances_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<UtteranceSSEs>& utterances() const noexcept { return utterances_; }
  const std::string& speaker_of(std::size_t index) const { return speakers_.at(index); }
  const std::string& speaker_of(const std::string& utterance_id) const;
  bool contains(const std::string& utterance_id) const { return index_.count(utterance_id) != 0; }
  // DataError for an unknown id.
  const UtteranceSSEs& at(const std::string& utterance_id) const;

  // Speaker ids in order of first appearance, with their utterance indices.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> by_speaker() const;

  bool operator==(const Corpus& other) const {
    return utterances_ == other.utterances_ && speakers_ == other.speakers_;
  }

 private:
  Split split_ = Split::kTrain;
  std::size_t dim_ = 0;
  std::vector<UtteranceSSEs> utterances_;
  std::vector<std::string> speakers_;
  std::map<std::string, std::size_t> index_;
};

// Speakers are "spk0000", ...; utterances "spk0000-u00", ...
Corpus generate(const SynthConfig& config);

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

// The last `test_speakers` speakers (in order of appearance) go to the test
// split. DataError if that leaves either side empty.
CorpusSplit split_speakers(const Corpus& corpus, std::size_t test_speakers);

struct Trial {
  bool target = false;
  std::vector<std::string> enroll;
  std::string test;
};

// Same-speaker pairs of distinct utterances and different-speaker pairs, no
// unordered pair twice, orientation and final order shuffled. DataError if
// the corpus has fewer than two speakers or cannot supply the counts.
std::vector<Trial> make_trials(const Corpus& corpus, std::size_t n_target,
                               std::size_t n_nontarget, std::uint64_t seed);

std::string encode_embeddings(const Corpus& corpus);
Corpus decode_embeddings(std::string_view bytes);
void write_embeddings(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_embeddings(const std::filesystem::path& path);

std::string join_ids(const std::vector<std::string>& ids);
std::vector<std::string> split_ids(const std::string& joined);

void write_trials(std::ostream& out, const std::vector<Trial>& trials);
void write_trial_file(const std::filesystem::path& path, const std::vector<Trial>& trials);
// FormatError naming the line on malformed input.
std::vector<Trial> read_trials(std::istream& in);
std::vector<Trial> read_trial_file(const std::filesystem::path& path);

}  // namespace gatsv
