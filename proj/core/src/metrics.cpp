// SPDX-License-Identifier: Apache-2.0
#include "gatsv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gatsv/errors.hpp"

namespace gatsv {

TrialScores::TrialScores(std::vector<ScoredTrial> trials) : trials_(std::move(trials)) {
  for (const ScoredTrial& t : trials_) {
    if (!std::isfinite(t.score)) throw ArgumentError("trial scores must be finite");
    if (t.target) ++targets_;
  }
  if (targets_ == 0 || targets_ == trials_.size()) {
    throw ArgumentError("need at least one target and one nontarget trial");
  }
}

std::vector<DetPoint> det_points(const TrialScores& scores) {
  std::vector<ScoredTrial> sorted = scores.trials();
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTrial& a, const ScoredTrial& b) { return a.score < b.score; });
  const double nt = static_cast<double>(scores.target_count());
  const double nn = static_cast<double>(scores.nontarget_count());

  // Walking up the sorted scores, everything already passed is rejected.
  std::vector<DetPoint> points;
  std::size_t rejected_targets = 0, rejected_nontargets = 0;
  std::size_t i = 0;
  double threshold = sorted.front().score;
  while (true) {
    points.push_back({static_cast<double>(scores.nontarget_count() - rejected_nontargets) / nn,
                      static_cast<double>(rejected_targets) / nt, threshold});
    if (i == sorted.size()) break;
    const double value = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == value) {
      if (sorted[i].target) {
        ++rejected_targets;
      } else {
        ++rejected_nontargets;
      }
      ++i;
    }
    threshold = i < sorted.size() ? value + (sorted[i].score - value) / 2.0
                                  : std::numeric_limits<double>::infinity();
  }
  return points;
}

EerResult eer(const TrialScores& scores) {
  const auto points = det_points(scores);
  std::size_t j = 0;
  while (points[j].frr - points[j].far < 0.0) ++j;
  const DetPoint& b = points[j];
  if (b.frr - b.far == 0.0 || j == 0) return {b.far, b.threshold};
  const DetPoint& a = points[j - 1];
  const double x1 = a.far, y1 = a.frr, x2 = b.far, y2 = b.frr;
  const double rate = (x1 * y2 - y1 * x2) / ((x1 - x2) + (y2 - y1));
  // Fraction of the way from a to b along the segment.
  const double t = (x1 - rate) / (x1 - x2);
  double threshold;
  if (std::isinf(b.threshold)) {
    threshold = a.threshold;
  } else {
    threshold = a.threshold + t * (b.threshold - a.threshold);
  }
  return {rate, threshold};
}

void write_score_lines(std::ostream& out, const std::vector<ScoreLine>& lines) {
  std::ostringstream buf;
  buf.precision(17);
  for (const ScoreLine& l : lines) {
    buf << (l.target ? 1 : 0) << ' ' << l.enroll_id << ' ' << l.test_id << ' ' << l.score << '\n';
  }
  out << buf.str();
}

void write_score_file(const std::filesystem::path& path, const std::vector<ScoreLine>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_score_lines(out, lines);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ScoreLine> read_score_lines(std::istream& in) {
  std::vector<ScoreLine> lines;
  std::string text;
  std::size_t line_no = 0;
  std::uint64_t offset = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const std::uint64_t start = offset;
    offset += text.size() + 1;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(text);
    std::string label, score_text, extra;
    ScoreLine l;
    if (!(fields >> label >> l.enroll_id >> l.test_id >> score_text) || (fields >> extra)) {
      throw FormatError("score line " + std::to_string(line_no) + ": expected 4 fields", start);
    }
    if (label != "0" && label != "1") {
      throw FormatError("score line " + std::to_string(line_no) + ": label must be 0 or 1", start);
    }
    l.target = label == "1";
    std::size_t used = 0;
    try {
      l.score = std::stod(score_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != score_text.size() || !std::isfinite(l.score)) {
      throw FormatError("score line " + std::to_string(line_no) + ": bad score '" + score_text + "'",
                        start);
    }
    lines.push_back(std::move(l));
  }
  return lines;
}

std::vector<ScoreLine> read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_score_lines(in);
}

TrialScores to_trial_scores(const std::vector<ScoreLine>& lines) {
  std::vector<ScoredTrial> trials;
  trials.reserve(lines.size());
  for (const ScoreLine& l : lines) trials.push_back({l.target, l.score});
  return TrialScores(std::move(trials));
}

}  // namespace gatsv
