// SPDX-License-Identifier: Apache-2.0
#include "gatsv/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gatsv/errors.hpp"
#include "gatsv/gat.hpp"
#include "gatsv/rng.hpp"
#include "gatsv/train.hpp"

namespace gatsv {

GradCheckReport check_gradients(const std::vector<Param*>& params,
                                const std::function<Var(Tape&)>& loss,
                                const GradCheckOptions& options) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    if (!options.sabotage_op.empty()) {
      tape.corrupt_adjoint_for_testing(options.sabotage_op, options.sabotage_factor);
    }
    tape.backward(loss(tape));
  }
  auto evaluate = [&] {
    Tape tape;
    return loss(tape).value().scalar_value();
  };

  GradCheckReport report;
  for (Param* p : params) {
    auto values = p->value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = evaluate();
      values[i] = saved - options.step;
      const double down = evaluate();
      values[i] = saved;

      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p->grad.data()[i];
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      if (scale <= options.floor) {
        ++report.skipped;
        continue;
      }
      ++report.checked;
      const double err = std::abs(analytic - numeric) / scale;
      if (err > report.worst_rel_err || report.worst_param.empty()) {
        report.worst_rel_err = std::max(err, report.worst_rel_err);
        report.worst_param = p->name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

namespace {

UtteranceSSEs random_utterance(Rng& rng, std::string id, std::size_t segments, std::size_t d) {
  Mat m(segments, d);
  for (double& v : m.data()) v = rng.gaussian();
  return UtteranceSSEs(std::move(id), std::move(m));
}

}  // namespace

GradCheckReport check_gat_gradients(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                    GradTarget target, const GradCheckOptions& options) {
  if (dims.empty()) throw ArgumentError("gradcheck: empty dims");
  GatModel model = init_model(dims, seed, 0.0);
  // Biases start at zero; give them values so their gradients are exercised
  // away from the init point.
  Rng rng(derive_seed(seed, 0x6772616463ull));
  for (Param* p : model.parameters())
    for (double& v : p->value.data()) v += 0.1 * rng.gaussian();

  const std::size_t d = dims.front();
  if (target == GradTarget::kScore) {
    const TrialGraph graph =
        build_trial_graph(random_utterance(rng, "e", 3, d), random_utterance(rng, "t", 3, d));
    return check_gradients(
        model.parameters(), [&](Tape& tape) { return score(tape, model, graph); }, options);
  }

  TrainBatch batch;
  for (std::size_t i = 0; i < 2; ++i) {
    batch.speakers.push_back("s" + std::to_string(i));
    batch.first.push_back(random_utterance(rng, "a" + std::to_string(i), 3, d));
    batch.second.push_back(random_utterance(rng, "b" + std::to_string(i), 3, d));
  }
  return check_gradients(
      model.parameters(),
      [&](Tape& tape) {
        Var s = score_matrix(tape, model, batch, false, 0);
        return target == GradTarget::kContrastive ? contrastive_loss(s) : hard_negative_loss(s, 1);
      },
      options);
}

}  // namespace gatsv
