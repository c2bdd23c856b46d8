#include <benchmark/benchmark.h>

#include "csocnn/cso/swarm.hpp"

using namespace csocnn;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void BM_SwarmSphere(benchmark::State& state) {
  const auto dims = static_cast<std::size_t>(state.range(0));
  cso::SwarmConfig config;
  config.n_cats = 30;
  config.max_iters = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cso::optimize(sphere, cso::Bounds(dims, cso::Bound{-5, 5}), config));
  }
}
BENCHMARK(BM_SwarmSphere)->Arg(2)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
