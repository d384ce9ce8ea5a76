// SPDX-License-Identifier: Apache-2.0
//
// Equal error rate and DET operating points.
//
// A trial is accepted when score >= threshold. Operating points are taken
// at the lowest unique score (accept everything), at each midpoint between
// consecutive unique scores, and at +inf (reject everything). FAR falls and
// FRR rises along that sequence.
//
// EER: find the first point j with FRR_j - FAR_j >= 0. If it is 0, the EER
// is FAR_j. Otherwise the segment from point j-1 to j is intersected with the
// diagonal FAR = FRR:
//
//   eer = (x1 y2 - y1 x2) / ((x1 - x2) + (y2 - y1)),  x = FAR, y = FRR
//
// and the threshold is interpolated between the two operating thresholds at
// the same fraction (or taken from the finite one when the other is +inf).

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gatsv {

struct ScoredTrial {
  bool target = false;
  double score = 0.0;
};

// Labelled scores. ArgumentError unless both classes are present and all
// scores are finite.
class TrialScores {
 public:
  TrialScores() = default;
  explicit TrialScores(std::vector<ScoredTrial> trials);

  const std::vector<ScoredTrial>& trials() const noexcept { return trials_; }
  std::size_t size() const noexcept { return trials_.size(); }
  std::size_t target_count() const noexcept { return targets_; }
  std::size_t nontarget_count() const noexcept { return trials_.size() - targets_; }

 private:
  std::vector<ScoredTrial> trials_;
  std::size_t targets_ = 0;
};

struct DetPoint {
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

std::vector<DetPoint> det_points(const TrialScores& scores);
EerResult eer(const TrialScores& scores);

// Score file lines: "label enroll_id test_id score", label 1 or 0.
struct ScoreLine {
  bool target = false;
  std::string enroll_id;
  std::string test_id;
  double score = 0.0;
};

// Writes scores with 17 significant digits so they parse back exactly.
void write_score_lines(std::ostream& out, const std::vector<ScoreLine>& lines);
void write_score_file(const std::filesystem::path& path, const std::vector<ScoreLine>& lines);
// FormatError naming the line on malformed input.
std::vector<ScoreLine> read_score_lines(std::istream& in);
std::vector<ScoreLine> read_score_file(const std::filesystem::path& path);

TrialScores to_trial_scores(const std::vector<ScoreLine>& lines);

}  // namespace gatsv
