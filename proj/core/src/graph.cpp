// SPDX-License-Identifier: Apache-2.0
#include "gatsv/graph.hpp"

#include <algorithm>

#include "gatsv/errors.hpp"

namespace gatsv {

UtteranceSSEs::UtteranceSSEs(std::string utterance_id, Mat segments)
    : id_(std::move(utterance_id)), segments_(std::move(segments)) {
  if (segments_.rows() == 0 || segments_.cols() == 0) {
    throw ArgumentError("utterance '" + id_ + "' must have at least one non-empty segment");
  }
}

TrialGraph::TrialGraph(Mat nodes, std::vector<Membership> membership)
    : nodes_(std::move(nodes)), membership_(std::move(membership)) {
  if (membership_.size() != nodes_.rows()) {
    throw DimensionError("trial graph: " + std::to_string(membership_.size()) + " tags for " +
                         std::to_string(nodes_.rows()) + " nodes");
  }
  const bool has_enroll =
      std::find(membership_.begin(), membership_.end(), Membership::kEnroll) != membership_.end();
  const bool has_test =
      std::find(membership_.begin(), membership_.end(), Membership::kTest) != membership_.end();
  if (!has_enroll || !has_test) {
    throw ArgumentError("trial graph needs nodes from both utterances");
  }
}

std::size_t TrialGraph::enroll_count() const noexcept {
  return static_cast<std::size_t>(
      std::count(membership_.begin(), membership_.end(), Membership::kEnroll));
}

UtteranceSSEs average_enrollment(std::span<const UtteranceSSEs> utterances) {
  if (utterances.empty()) {
    throw ArgumentError("average_enrollment: no utterances");
  }
  const UtteranceSSEs& first = utterances.front();
  if (utterances.size() == 1) return first;

  Mat sum(first.segment_count(), first.dim());
  std::string id;
  for (const UtteranceSSEs& u : utterances) {
    if (u.segment_count() != first.segment_count() || u.dim() != first.dim()) {
      throw DimensionError("average_enrollment: '" + u.id() + "' has " +
                           shape_string(u.segments()) + " segments, expected " +
                           shape_string(first.segments()));
    }
    auto src = u.segments().data();
    auto dst = sum.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    if (!id.empty()) id += ',';
    id += u.id();
  }
  const double inv = 1.0 / static_cast<double>(utterances.size());
  for (double& v : sum.data()) v *= inv;
  return UtteranceSSEs(std::move(id), std::move(sum));
}

TrialGraph build_trial_graph(const UtteranceSSEs& enroll, const UtteranceSSEs& test) {
  if (enroll.dim() != test.dim()) {
    throw DimensionError("build_trial_graph: enroll d=" + std::to_string(enroll.dim()) +
                         ", test d=" + std::to_string(test.dim()));
  }
  const std::size_t n = enroll.segment_count() + test.segment_count();
  Mat nodes(n, enroll.dim());
  auto dst = nodes.data();
  auto a = enroll.segments().data();
  auto b = test.segments().data();
  std::copy(a.begin(), a.end(), dst.begin());
  std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));

  std::vector<Membership> tags(n, Membership::kTest);
  std::fill_n(tags.begin(), enroll.segment_count(), Membership::kEnroll);
  return TrialGraph(std::move(nodes), std::move(tags));
}

std::vector<double> mean_embedding(const UtteranceSSEs& utterance) {
  std::vector<double> mean(utterance.dim(), 0.0);
  for (std::size_t j = 0; j < utterance.segment_count(); ++j) {
    auto seg = utterance.segment(j);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += seg[c];
  }
  const double inv = 1.0 / static_cast<double>(utterance.segment_count());
  for (double& v : mean) v *= inv;
  return mean;
}

}  // namespace gatsv
