#include <benchmark/benchmark.h>

#include <carbmon/arma.hpp>
#include <carbmon/calibration.hpp>
#include <carbmon/diagnostics.hpp>
#include <carbmon/flux_data.hpp>
#include <carbmon/monitor.hpp>
#include <carbmon/rng.hpp>
#include <carbmon/scenario.hpp>

#include <cstddef>
#include <vector>

namespace {

const carbmon::BudgetImbalanceSeries& imbalance() {
  static const carbmon::BudgetImbalanceSeries series =
      carbmon::budget_imbalance(carbmon::load_vintage(CARBMON_DATA_FILE));
  return series;
}

void BM_FitAr1(benchmark::State& state) {
  const std::vector<double>& y = imbalance().values;
  for (auto _ : state) {
    benchmark::DoNotOptimize(carbmon::fit_ar1(y));
  }
}
BENCHMARK(BM_FitAr1);

void BM_Diagnose(benchmark::State& state) {
  const std::vector<double>& y = imbalance().values;
  for (auto _ : state) {
    benchmark::DoNotOptimize(carbmon::diagnose(y));
  }
}
BENCHMARK(BM_Diagnose);

void BM_FitArma11(benchmark::State& state) {
  const std::vector<double>& y = imbalance().values;
  for (auto _ : state) {
    benchmark::DoNotOptimize(carbmon::fit_arma(y, 1, 1));
  }
}
BENCHMARK(BM_FitArma11);

void BM_Calibrate(benchmark::State& state) {
  const auto replications = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        carbmon::calibrate(30, 0.05, "sqrt", replications));
  }
}
BENCHMARK(BM_Calibrate)->Arg(10000)->Arg(100000);

void BM_MonitorStep(benchmark::State& state) {
  carbmon::GaussianStream gen(carbmon::kDefaultSeed,
                              carbmon::StreamDomain::generic, 1);
  const std::vector<double> path = carbmon::simulate_ar1(0.35, 0.72, 62, gen);
  const auto series = [&](std::size_t len) {
    carbmon::BudgetImbalanceSeries s;
    for (std::size_t i = 0; i < len; ++i) {
      s.years.push_back(1959 + static_cast<int>(i));
      s.values.push_back(path[i]);
    }
    return s;
  };
  carbmon::MonitorConfig cfg;
  cfg.boundary.horizon = 30;
  cfg.boundary.alpha = 0.05;
  cfg.boundary.c = 1000.0;
  cfg.gaussianity_check = false;
  const carbmon::MonitorState init = carbmon::init_monitor(cfg, series(61));
  const carbmon::BudgetImbalanceSeries next = series(62);
  for (auto _ : state) {
    carbmon::MonitorState st = init;
    benchmark::DoNotOptimize(carbmon::step(st, next));
  }
}
BENCHMARK(BM_MonitorStep);

void BM_PowerExperiment(benchmark::State& state) {
  carbmon::ScenarioSpec spec;
  spec.alpha = 0.32;
  spec.m = 0.20;
  spec.replications = static_cast<std::uint64_t>(state.range(0));
  carbmon::BoundarySpec boundary;
  boundary.horizon = 30;
  boundary.alpha = 0.32;
  boundary.c = 1.44;
  boundary.replications = 1;
  boundary.seed = carbmon::kDefaultSeed;
  for (auto _ : state) {
    benchmark::DoNotOptimize(carbmon::run_experiment(spec, boundary));
  }
}
BENCHMARK(BM_PowerExperiment)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
