#include <benchmark/benchmark.h>

#include "csocnn/nn/layer.hpp"
#include "csocnn/nn/network.hpp"
#include "csocnn/random.hpp"

using namespace csocnn;

namespace {

nn::Tensor random_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor t({n, 75, 1, 1});
  for (auto& v : t.storage()) v = static_cast<float>(uniform01(rng));
  return t;
}

void BM_BaselineForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const nn::Network net(nn::baseline_architecture(5), nn::baseline_input_shape(), 1);
  const auto batch = random_batch(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BaselineForward)->Arg(1)->Arg(64)->Arg(640);

void BM_BaselineTrainStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  nn::Network net(nn::baseline_architecture(5), nn::baseline_input_shape(), 1);
  const auto batch = random_batch(n, 3);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 5);
  for (auto _ : state) {
    auto out = net.forward(batch, nn::Mode::train);
    benchmark::DoNotOptimize(net.backward(out.cache, labels));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BaselineTrainStep)->Arg(64)->Arg(640);

}  // namespace
