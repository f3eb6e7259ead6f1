#include <benchmark/benchmark.h>

#include "kbu/estimators.hpp"
#include "kbu/scenarios.hpp"
#include "kbu/synth.hpp"

using namespace kbu;

namespace {

const ScenarioBundle& oscillator() {
  static ScenarioBundle bundle = oscillator_scenario(3.0);
  return bundle;
}

Trajectory oscillator_measurement() {
  const auto& bundle = oscillator();
  auto samples = sample_disturbances(bundle.shared, bundle.gamma, bundle.r_cov, bundle.q_cov,
                                     bundle.grid, 1);
  return generate_measurement(bundle.space.members[static_cast<size_t>(bundle.true_index)],
                              bundle.shared, samples, bundle.grid, {})
      .measurement;
}

}  // namespace

static void BM_RiccatiPairSingleMember(benchmark::State& state) {
  const auto& bundle = oscillator();
  const auto& sys = bundle.space.members[static_cast<size_t>(bundle.true_index)];
  for (auto _ : state) {
    auto solution = make_solution(sys, bundle.shared, bundle.grid, {});
    benchmark::DoNotOptimize(solution.precision[500](0, 0));
  }
}
BENCHMARK(BM_RiccatiPairSingleMember)->Unit(benchmark::kMillisecond);

static void BM_FilterSingleMember(benchmark::State& state) {
  const auto& bundle = oscillator();
  const auto& sys = bundle.space.members[static_cast<size_t>(bundle.true_index)];
  const auto y = oscillator_measurement();
  const auto riccati = make_solution(sys, bundle.shared, bundle.grid, {});
  for (auto _ : state) {
    auto run = run_filter(sys, bundle.shared, y, riccati, bundle.grid, {});
    benchmark::DoNotOptimize(run.estimate[1000][0]);
  }
}
BENCHMARK(BM_FilterSingleMember)->Unit(benchmark::kMillisecond);

static void BM_RiccatiFamily(benchmark::State& state) {
  const auto& bundle = oscillator();
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto family = riccati_family(bundle.space, bundle.shared, bundle.grid, {}, jobs);
    benchmark::DoNotOptimize(family.back().covariance[1000](0, 0));
  }
}
BENCHMARK(BM_RiccatiFamily)->Arg(1)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond);

static void BM_EnergyMinimizer(benchmark::State& state) {
  const auto& bundle = oscillator();
  const auto y = oscillator_measurement();
  static const auto family = riccati_family(bundle.space, bundle.shared, bundle.grid, {}, 0);
  static const auto ensemble =
      run_ensemble(bundle.space, bundle.shared, y, bundle.grid, {}, family, 0);
  for (auto _ : state) {
    auto en = energy_min_estimator(ensemble);
    benchmark::DoNotOptimize(en.estimate[1000][0]);
  }
}
BENCHMARK(BM_EnergyMinimizer)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
