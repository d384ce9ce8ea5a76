// SPDX-License-Identifier: Apache-2.0
#include "gatsv/adam.hpp"

#include <cmath>

#include "gatsv/errors.hpp"

namespace gatsv {

Adam::Adam(std::vector<Param*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step(double lr) {
  for (const Param* p : params_) {
    if (!p->grad.same_shape(p->value)) {
      throw TrainingError("adam: gradient of '" + p->name + "' has shape " +
                          shape_string(p->grad) + ", value is " + shape_string(p->value));
    }
    if (!p->grad.all_finite()) {
      throw TrainingError("adam: non-finite gradient in parameter '" + p->name + "'");
    }
  }

  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double decay = lr * options_.weight_decay;

  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto value = params_[k]->value.data();
    auto grad = params_[k]->grad.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= decay * value[i];
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

}  // namespace gatsv
