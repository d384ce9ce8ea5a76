// SPDX-License-Identifier: Apache-2.0
#include "gatsv/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gatsv/binary_io.hpp"
#include "gatsv/errors.hpp"
#include "gatsv/rng.hpp"

namespace gatsv {

namespace {

constexpr std::string_view kEmbeddingMagic = "SSEF1";
// Above this many candidate nontarget pairs, sample instead of enumerating.
constexpr std::size_t kEnumerateLimit = std::size_t{4} << 20;

std::vector<double> gaussian_vector(Rng& rng, std::size_t d, double sd) {
  std::vector<double> v(d);
  for (double& x : v) x = sd * rng.gaussian();
  return v;
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (speakers == 0 || utterances_per_speaker == 0 || segments_per_utterance == 0 || dim == 0) {
    throw ArgumentError("synth: counts must be >= 1");
  }
  if (!(within_noise >= 0.0) || !(segment_noise >= 0.0) || !(outlier_scale >= 0.0)) {
    throw ArgumentError("synth: noise parameters must be >= 0");
  }
  if (!(outlier_prob >= 0.0 && outlier_prob <= 1.0)) {
    throw ArgumentError("synth: outlier_prob must be in [0, 1]");
  }
}

void Corpus::add(UtteranceSSEs utterance, std::string speaker_id) {
  if (index_.count(utterance.id())) throw DataError("duplicate utterance id '" + utterance.id() + "'");
  if (!utterances_.empty() && utterance.dim() != dim_) {
    throw DataError("utterance '" + utterance.id() + "' has d=" + std::to_string(utterance.dim()) +
                    ", corpus has d=" + std::to_string(dim_));
  }
  dim_ = utterance.dim();
  index_.emplace(utterance.id(), utterances_.size());
  utterances_.push_back(std::move(utterance));
  speakers_.push_back(std::move(speaker_id));
}

const std::string& Corpus::speaker_of(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  if (it == index_.end()) throw DataError("unknown utterance id '" + utterance_id + "'");
  return speakers_[it->second];
}

const UtteranceSSEs& Corpus::at(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  if (it == index_.end()) throw DataError("unknown utterance id '" + utterance_id + "'");
  return utterances_[it->second];
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> Corpus::by_speaker() const {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < speakers_.size(); ++i) {
    auto [it, inserted] = slot.emplace(speakers_[i], out.size());
    if (inserted) out.push_back({speakers_[i], {}});
    out[it->second].second.push_back(i);
  }
  return out;
}

Corpus generate(const SynthConfig& config) {
  config.validate();
  const std::size_t d = config.dim;
  Rng rng(config.seed);

  std::vector<std::vector<double>> centroids;
  centroids.reserve(config.speakers);
  for (std::size_t s = 0; s < config.speakers; ++s) {
    auto c = gaussian_vector(rng, d, 1.0);
    normalize(c);
    centroids.push_back(std::move(c));
  }

  const double offset_sd = config.within_noise / std::sqrt(static_cast<double>(d));
  const double outlier_sd = config.outlier_scale * config.segment_noise;
  Corpus corpus;
  for (std::size_t s = 0; s < config.speakers; ++s) {
    const std::string speaker = numbered("spk", s, 4);
    const auto& c = centroids[s];
    for (std::size_t u = 0; u < config.utterances_per_speaker; ++u) {
      auto utt = gaussian_vector(rng, d, offset_sd);
      for (std::size_t i = 0; i < d; ++i) utt[i] += c[i];
      normalize(utt);
      Mat segments(config.segments_per_utterance, d);
      for (std::size_t j = 0; j < config.segments_per_utterance; ++j) {
        const bool outlier = rng.bernoulli(config.outlier_prob);
        const auto& base = outlier ? c : utt;
        const double sd = outlier ? outlier_sd : config.segment_noise;
        for (std::size_t i = 0; i < d; ++i) segments(j, i) = base[i] + sd * rng.gaussian();
      }
      corpus.add(UtteranceSSEs(speaker + numbered("-u", u, 2), std::move(segments)), speaker);
    }
  }
  return corpus;
}

CorpusSplit split_speakers(const Corpus& corpus, std::size_t test_speakers) {
  const auto groups = corpus.by_speaker();
  if (test_speakers == 0 || test_speakers >= groups.size()) {
    throw DataError("cannot split " + std::to_string(groups.size()) + " speakers with " +
                    std::to_string(test_speakers) + " held out for test");
  }
  CorpusSplit out{Corpus(Split::kTrain), Corpus(Split::kTest)};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Corpus& dst = g + test_speakers < groups.size() ? out.train : out.test;
    for (std::size_t i : groups[g].second) dst.add(corpus.utterances()[i], groups[g].first);
  }
  return out;
}

std::vector<Trial> make_trials(const Corpus& corpus, std::size_t n_target,
                               std::size_t n_nontarget, std::uint64_t seed) {
  const auto groups = corpus.by_speaker();
  if (groups.size() < 2) throw DataError("make_trials: need at least two speakers");
  Rng rng(seed);
  using Pair = std::pair<std::size_t, std::size_t>;

  std::vector<Pair> targets;
  for (const auto& g : groups) {
    const auto& idx = g.second;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) targets.push_back({idx[a], idx[b]});
  }
  if (n_target > targets.size()) {
    throw DataError("make_trials: asked for " + std::to_string(n_target) + " target trials, only " +
                    std::to_string(targets.size()) + " exist");
  }
  rng.shuffle(std::span<Pair>(targets));
  targets.resize(n_target);

  const std::size_t n = corpus.size();
  const std::size_t all_pairs = n * (n - 1) / 2;
  std::size_t same_pairs = 0;
  for (const auto& g : groups) same_pairs += g.second.size() * (g.second.size() - 1) / 2;
  const std::size_t available = all_pairs - same_pairs;
  if (n_nontarget > available) {
    throw DataError("make_trials: asked for " + std::to_string(n_nontarget) +
                    " nontarget trials, only " + std::to_string(available) + " exist");
  }
  std::vector<Pair> nontargets;
  if (available <= kEnumerateLimit) {
    nontargets.reserve(available);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (corpus.speaker_of(a) != corpus.speaker_of(b)) nontargets.push_back({a, b});
    rng.shuffle(std::span<Pair>(nontargets));
    nontargets.resize(n_nontarget);
  } else {
    std::set<Pair> seen;
    while (nontargets.size() < n_nontarget) {
      std::size_t a = rng.below(n), b = rng.below(n);
      if (a == b || corpus.speaker_of(a) == corpus.speaker_of(b)) continue;
      if (a > b) std::swap(a, b);
      if (seen.insert({a, b}).second) nontargets.push_back({a, b});
    }
  }

  std::vector<Trial> trials;
  trials.reserve(n_target + n_nontarget);
  auto emit = [&](const Pair& p, bool target) {
    auto [a, b] = p;
    if (rng.bernoulli(0.5)) std::swap(a, b);
    trials.push_back({target, {corpus.utterances()[a].id()}, corpus.utterances()[b].id()});
  };
  for (const Pair& p : targets) emit(p, true);
  for (const Pair& p : nontargets) emit(p, false);
  rng.shuffle(std::span<Trial>(trials));
  return trials;
}

std::string encode_embeddings(const Corpus& corpus) {
  ByteWriter w;
  w.magic(kEmbeddingMagic);
  w.u32(static_cast<std::uint32_t>(corpus.dim()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const UtteranceSSEs& u = corpus.utterances()[i];
    w.string(u.id());
    w.string(corpus.speaker_of(i));
    w.matrix(u.segments());
  }
  return w.take();
}

Corpus decode_embeddings(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(kEmbeddingMagic);
  const std::uint32_t d = r.u32();
  Corpus corpus;
  while (!r.at_end()) {
    const std::uint64_t start = r.offset();
    std::string id = r.string();
    std::string speaker = r.string();
    const std::uint64_t at = r.offset();
    Mat segments = r.matrix();
    if (segments.cols() != d) {
      throw FormatError("utterance '" + id + "' has d=" + std::to_string(segments.cols()) +
                            ", header says d=" + std::to_string(d),
                        at);
    }
    if (segments.rows() == 0) throw FormatError("utterance '" + id + "' has no segments", at);
    if (corpus.contains(id)) throw FormatError("duplicate utterance id '" + id + "'", start);
    corpus.add(UtteranceSSEs(std::move(id), std::move(segments)), std::move(speaker));
  }
  return corpus;
}

void write_embeddings(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_bytes(path, encode_embeddings(corpus));
}

Corpus read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file_bytes(path));
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ',';
    out += id;
  }
  return out;
}

std::vector<std::string> split_ids(const std::string& joined) {
  std::vector<std::string> out;
  std::stringstream ss(joined);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void write_trials(std::ostream& out, const std::vector<Trial>& trials) {
  std::string buf;
  for (const Trial& t : trials) {
    buf += t.target ? '1' : '0';
    buf += ' ';
    buf += join_ids(t.enroll);
    buf += ' ';
    buf += t.test;
    buf += '\n';
  }
  out << buf;
}

void write_trial_file(const std::filesystem::path& path, const std::vector<Trial>& trials) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_trials(out, trials);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Trial> read_trials(std::istream& in) {
  std::vector<Trial> trials;
  std::string text;
  std::size_t line_no = 0;
  std::uint64_t offset = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const std::uint64_t start = offset;
    offset += text.size() + 1;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(text);
    std::string label, enroll, test, extra;
    if (!(fields >> label >> enroll >> test) || (fields >> extra)) {
      throw FormatError("trial line " + std::to_string(line_no) + ": expected 3 fields", start);
    }
    if (label != "0" && label != "1") {
      throw FormatError("trial line " + std::to_string(line_no) + ": label must be 0 or 1", start);
    }
    auto ids = split_ids(enroll);
    if (ids.empty() || std::any_of(ids.begin(), ids.end(), [](auto& s) { return s.empty(); })) {
      throw FormatError("trial line " + std::to_string(line_no) + ": empty enrollment id", start);
    }
    trials.push_back({label == "1", std::move(ids), std::move(test)});
  }
  return trials;
}

std::vector<Trial> read_trial_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_trials(in);
}

}  // namespace gatsv
