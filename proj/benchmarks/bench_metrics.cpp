#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "csocnn/metrics/confusion.hpp"
#include "csocnn/metrics/roc.hpp"
#include "csocnn/random.hpp"

using namespace csocnn;

namespace {

void BM_ConfusionAndScalars(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<int> truth(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(uniform_index(rng, 5));
    pred[i] = uniform01(rng) < 0.9 ? truth[i] : static_cast<int>(uniform_index(rng, 5));
  }
  for (auto _ : state) {
    const auto cm = metrics::confusion(truth, pred, 5);
    benchmark::DoNotOptimize(metrics::scalar_metrics(cm));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConfusionAndScalars)->Arg(15351);

void BM_RocFromScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> scores(n);
  auto positive = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = uniform01(rng) < 0.4;
    scores[i] = uniform01(rng) + (positive[i] ? 0.3 : 0.0);
  }
  const std::span<const bool> labels(positive.get(), n);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::roc_from_scores(scores, labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocFromScores)->Arg(15351);

}  // namespace
