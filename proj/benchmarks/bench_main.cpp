#include <vector>

#include <benchmark/benchmark.h>

#include "rssiloc/eval.hpp"
#include "rssiloc/filters.hpp"
#include "rssiloc/locnet.hpp"
#include "rssiloc/random.hpp"
#include "rssiloc/simulator.hpp"
#include "rssiloc/trilateration.hpp"

namespace {

using namespace rssiloc;

std::vector<double> noisy_stream(std::size_t n) {
  Rng rng(3);
  std::vector<double> s(n);
  for (auto& v : s) v = rng.normal(-72, 4);
  return s;
}

void BM_Trilaterate(benchmark::State& state) {
  const std::vector<trilateration::Anchor> anchors = {{{0, 0}, 2.1}, {{4, 0}, 2.9}, {{0, 3}, 1.7}};
  for (auto _ : state) benchmark::DoNotOptimize(trilateration::trilaterate(anchors));
}
BENCHMARK(BM_Trilaterate);

void BM_KalmanRun(benchmark::State& state) {
  const auto s = noisy_stream(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(filters::kalman_run(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KalmanRun)->Arg(1000);

void BM_LookbackStream(benchmark::State& state) {
  const auto s = noisy_stream(1000);
  const filters::LookbackConfig c{static_cast<int>(state.range(0)), filters::OutlierMode::MinMax};
  for (auto _ : state) benchmark::DoNotOptimize(filters::lookback_stream(s, c));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_LookbackStream)->Arg(5)->Arg(50);

void BM_Simulate(benchmark::State& state) {
  const auto home = simulator::home_scenario();
  for (auto _ : state) benchmark::DoNotOptimize(simulator::simulate(home, {4.0, 7}));
}
BENCHMARK(BM_Simulate);

void BM_EvaluateHome(benchmark::State& state) {
  const auto home = simulator::home_scenario();
  const auto trace = simulator::simulate(home, {4.0, 7}).trace;
  const auto methods = eval::parse_methods("raw,lookback:50,kalman,hybrid:50");
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate(trace, home, methods));
}
BENCHMARK(BM_EvaluateHome);

void BM_MlpForward(benchmark::State& state) {
  locnet::MlpConfig c;
  c.hidden_layers = static_cast<int>(state.range(0));
  const auto m = locnet::Mlp::initialize(c, 1);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward({-70, -75, -80}));
}
BENCHMARK(BM_MlpForward)->DenseRange(1, 5, 2);

void BM_MlpTrainEpochs(benchmark::State& state) {
  const auto home = simulator::home_scenario();
  const auto d = locnet::make_dataset(simulator::simulate(home, {4.0, 2, 4500, 500}).trace, home);
  locnet::MlpConfig c;
  c.hidden_layers = 3;
  c.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(locnet::train(d, c));
}
BENCHMARK(BM_MlpTrainEpochs)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
