// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of taped gradients.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gatsv/numeric.hpp"
#include "gatsv/tape.hpp"

namespace gatsv {

struct GradCheckOptions {
  double step = 1e-5;
  // Entries where both gradients are at most this large are not compared.
  double floor = 1e-8;
  // When non-empty, the analytic pass corrupts adjoints of this op.
  std::string sabotage_op;
  double sabotage_factor = 1.5;
};

struct GradCheckReport {
  double worst_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;

  bool passed(double tolerance) const { return worst_rel_err < tolerance; }
};

// `loss` must build a scalar on the given tape from the current parameter
// values. Each entry is compared as |a - f| / max(|a|, |f|) with f the
// central difference (L(v + h) - L(v - h)) / 2h.
GradCheckReport check_gradients(const std::vector<Param*>& params,
                                const std::function<Var(Tape&)>& loss,
                                const GradCheckOptions& options = {});

enum class GradTarget : std::uint8_t { kScore, kContrastive, kHardNegative };

// Random GAT (dropout off) on a random 3 + 3 segment graph, or for the
// losses an M = 2 batch of such utterances (H = 1).
GradCheckReport check_gat_gradients(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                    GradTarget target, const GradCheckOptions& options = {});

}  // namespace gatsv
