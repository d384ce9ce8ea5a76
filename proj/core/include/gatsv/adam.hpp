// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "gatsv/numeric.hpp"

namespace gatsv {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled: value <- value - lr * weight_decay * value before the Adam delta.
  double weight_decay = 0.0;
};

// Adam with bias correction. Holds first/second moment buffers for a fixed,
// ordered parameter set; the Params must outlive the optimizer.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamOptions options = {});

  // One update from the gradients currently in Param::grad. Throws
  // TrainingError naming the parameter if any gradient entry is non-finite;
  // no parameter is modified in that case.
  void step(double lr);

  std::size_t steps_taken() const noexcept { return t_; }
  const AdamOptions& options() const noexcept { return options_; }

 private:
  std::vector<Param*> params_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  AdamOptions options_;
  std::size_t t_ = 0;
};

}  // namespace gatsv
