// Apache License, Version 2.0, refer to LICENSE.txt

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "vaxbayes/clustering.hpp"
#include "vaxbayes/hmc.hpp"
#include "vaxbayes/model.hpp"

using namespace vaxbayes;

namespace {

ModelInstance simulated_model(std::size_t records) {
  const auto& roster = default_state_roster();
  ParameterVector truth(roster.size());
  truth.beta = {-0.74, 0.45, 1.24, 1.79, 0.39, 0.91, -0.3, 0.25, 0.43, 0.77, 0.04};
  truth.log_sigma_alpha = std::log(0.3);
  const auto data = simulate_dataset(truth, SimulationLayout::even(roster, records), 1);
  return ModelInstance(encode_design(data), PriorSpec{});
}

PointSet random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  PointSet points(n, std::vector<double>(kStateFeatureCount));
  for (auto& p : points) {
    for (double& x : p) x = normal(rng);
  }
  return points;
}

void BM_LogDensityGradient(benchmark::State& state) {
  const auto model = simulated_model(static_cast<std::size_t>(state.range(0)));
  std::vector<double> x(model.dimension(), 0.1), grad(model.dimension());
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.log_density_gradient(x, grad));
  }
  state.counters["cells"] = static_cast<double>(model.cell_count());
}
BENCHMARK(BM_LogDensityGradient)->Arg(1000)->Arg(5000)->Arg(50000);

void BM_Leapfrog32(benchmark::State& state) {
  const auto model = simulated_model(5000);
  const LogDensityGradient target = [&model](std::span<const double> x, std::span<double> g) {
    return model.log_density_gradient(x, g);
  };
  const std::vector<double> q(model.dimension(), 0.0), p(model.dimension(), 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(leapfrog(q, p, 0.01, 32, target));
  }
}
BENCHMARK(BM_Leapfrog32);

void BM_AgglomerateWard(benchmark::State& state) {
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(agglomerate(points, Linkage::Ward));
  }
}
BENCHMARK(BM_AgglomerateWard)->Arg(49)->Arg(200);

void BM_GapStatistic(benchmark::State& state) {
  const auto points = random_points(49, 3);
  GapOptions options;
  options.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gap_statistic(points, options));
  }
}
BENCHMARK(BM_GapStatistic)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
