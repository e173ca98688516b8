#include <benchmark/benchmark.h>

#include <vector>

#include "antidote/inner_solver.hpp"
#include "antidote/model.hpp"
#include "antidote/primal_oracle.hpp"
#include "antidote/rng.hpp"

namespace {

std::vector<double> random_losses(std::size_t n, std::uint64_t seed) {
  antidote::Rng rng(seed);
  std::vector<double> losses(n);
  for (double& l : losses) l = rng.uniform(0.0, 5.0);
  return losses;
}

void BM_SolveKl(benchmark::State& state) {
  const auto losses = random_losses(static_cast<std::size_t>(state.range(0)), 1);
  const antidote::DivergenceSpec spec{antidote::FFamily::kl(), 0.6, 0.05, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(antidote::solve_kl_lambda(losses, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SolveKl)->Arg(8)->Arg(128)->Arg(1024);

void BM_SolveAlpha(benchmark::State& state) {
  const auto losses = random_losses(static_cast<std::size_t>(state.range(0)), 2);
  const antidote::DivergenceSpec spec{antidote::FFamily::alpha(2.0), 0.5, 0.05, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(antidote::solve_f_params(losses, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SolveAlpha)->Arg(8)->Arg(128)->Arg(1024);

void BM_SolvePenalized(benchmark::State& state) {
  const auto losses = random_losses(128, 3);
  const antidote::DivergenceSpec spec{antidote::FFamily::kl(), 0.0, 0.05, 1.0};
  const antidote::PenaltySpec penalty{1.0};
  for (auto _ : state) benchmark::DoNotOptimize(antidote::solve_penalized(losses, spec, penalty));
}
BENCHMARK(BM_SolvePenalized);

void BM_PrimalOracle(benchmark::State& state) {
  const auto losses = random_losses(static_cast<std::size_t>(state.range(0)), 4);
  const antidote::DivergenceSpec spec{antidote::FFamily::alpha(3.0), 0.3, 0.05, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(antidote::solve_primal(losses, spec));
}
BENCHMARK(BM_PrimalOracle)->Arg(8)->Arg(64);

void BM_WeightedGradient(benchmark::State& state) {
  const auto model = antidote::MlpModel::initialized({2, 16, 16, 4}, antidote::Activation::relu, 5);
  const std::size_t b = 128;
  antidote::Rng rng(6);
  std::vector<double> x(b * 2);
  std::vector<int> y(b);
  for (double& v : x) v = rng.normal();
  for (int& v : y) v = static_cast<int>(rng.below(4));
  const std::vector<double> w(b, 1.0);
  const antidote::LabeledBatch batch{x, y};
  for (auto _ : state) benchmark::DoNotOptimize(antidote::weighted_gradient(model, batch, w));
}
BENCHMARK(BM_WeightedGradient);

}  // namespace

BENCHMARK_MAIN();
