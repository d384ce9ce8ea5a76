// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "gatsv/baselines.hpp"
#include "gatsv/data.hpp"
#include "gatsv/gat.hpp"
#include "gatsv/metrics.hpp"
#include "gatsv/rng.hpp"
#include "gatsv/train.hpp"

namespace {

gatsv::Corpus small_corpus() {
  gatsv::SynthConfig c;
  c.speakers = 20;
  return gatsv::generate(c);
}

void BM_GatScoreTrial(benchmark::State& state) {
  const auto corpus = small_corpus();
  const auto& u = corpus.utterances();
  const auto model = gatsv::init_model(gatsv::default_dims(corpus.dim()), 1);
  const auto graph = gatsv::build_trial_graph(u[0], u[15]);
  for (auto _ : state) benchmark::DoNotOptimize(gatsv::score(model, graph));
}
BENCHMARK(BM_GatScoreTrial);

void BM_TtaScoreTrial(benchmark::State& state) {
  const auto corpus = small_corpus();
  const auto& u = corpus.utterances();
  for (auto _ : state) benchmark::DoNotOptimize(gatsv::tta_score(u[0], u[15]));
}
BENCHMARK(BM_TtaScoreTrial);

void BM_TrainEpoch(benchmark::State& state) {
  const auto corpus = small_corpus();
  gatsv::TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) {
    auto result = gatsv::train_gat(corpus, gatsv::default_dims(corpus.dim()), cfg);
    benchmark::DoNotOptimize(result.model.dims().size());
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_Eer(benchmark::State& state) {
  gatsv::Rng rng(1);
  std::vector<gatsv::ScoredTrial> trials;
  for (std::int64_t i = 0; i < state.range(0); ++i)
    trials.push_back({i % 2 == 0, rng.gaussian() + (i % 2 == 0 ? 1.0 : 0.0)});
  const gatsv::TrialScores scores(trials);
  for (auto _ : state) benchmark::DoNotOptimize(gatsv::eer(scores).eer);
}
BENCHMARK(BM_Eer)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
