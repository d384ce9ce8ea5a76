// SPDX-License-Identifier: Apache-2.0
//
// Segment-wise speaker embeddings (SSEs) and the fully connected trial graph
// built from an enrollment and a test utterance.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gatsv/numeric.hpp"

namespace gatsv {

// One d-dimensional segment embedding.
using SseView = std::span<const double>;

// The ordered segments of one utterance, stored as an S x d matrix.
class UtteranceSSEs {
 public:
  UtteranceSSEs() = default;
  // Throws ArgumentError when `segments` has no rows or zero width.
  UtteranceSSEs(std::string utterance_id, Mat segments);

  const std::string& id() const noexcept { return id_; }
  std::size_t segment_count() const noexcept { return segments_.rows(); }
  std::size_t dim() const noexcept { return segments_.cols(); }
  SseView segment(std::size_t j) const { return segments_.row(j); }
  const Mat& segments() const noexcept { return segments_; }

  bool operator==(const UtteranceSSEs&) const = default;

 private:
  std::string id_;
  Mat segments_;
};

enum class Membership : std::uint8_t { kEnroll = 0, kTest = 1 };

// Node matrix (enroll segments, then test segments) with the utterance tag
// of every node. No edge list is kept: every node neighbours every node,
// itself included.
class TrialGraph {
 public:
  TrialGraph(Mat nodes, std::vector<Membership> membership);

  const Mat& nodes() const noexcept { return nodes_; }
  std::span<const Membership> membership() const noexcept { return membership_; }
  std::size_t node_count() const noexcept { return nodes_.rows(); }
  std::size_t dim() const noexcept { return nodes_.cols(); }
  std::size_t enroll_count() const noexcept;

  bool same_utterance(std::size_t u, std::size_t v) const {
    return membership_.at(u) == membership_.at(v);
  }

 private:
  Mat nodes_;
  std::vector<Membership> membership_;
};

// Segment j of the result is the elementwise mean of segment j over all
// inputs; one input is returned unchanged. The id is the comma-joined input
// ids. ArgumentError on an empty list, DimensionError on S or d mismatch.
UtteranceSSEs average_enrollment(std::span<const UtteranceSSEs> utterances);

// DimensionError when the two sides disagree on d.
TrialGraph build_trial_graph(const UtteranceSSEs& enroll, const UtteranceSSEs& test);

// Elementwise mean over an utterance's segments (the single-embedding view).
std::vector<double> mean_embedding(const UtteranceSSEs& utterance);

}  // namespace gatsv
