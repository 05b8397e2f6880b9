// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "platoon/harness.hpp"

using namespace platoon;

namespace {

ScenarioConfig bench_config(double rho) {
  ScenarioConfig c;
  c.density_rho = rho;
  c.runs_per_point = 8;
  c.periods_per_run = 1000;
  return c;
}

void BM_RunPoint(benchmark::State& state) {
  const ScenarioConfig c = bench_config(static_cast<double>(state.range(0)));
  PointOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(run_point(c, opt).collisions);
}

void BM_RunPointSerial(benchmark::State& state) {
  const ScenarioConfig c = bench_config(static_cast<double>(state.range(0)));
  PointOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(run_point_serial(c, opt).collisions);
}

World sample_world(double rho) {
  const ScenarioConfig c = bench_config(rho);
  Rng rng(1);
  World w = init_world(place_vehicles(c, rng), c, rng);
  for (int n = 0; n < 30; ++n) w.step(n % 200, rng);
  return w;
}

void BM_AllSensingRows(benchmark::State& state) {
  const World w = sample_world(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(all_sensing_rows(w).size());
}

void BM_AllSensingRowsReference(benchmark::State& state) {
  const World w = sample_world(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(all_sensing_rows_reference(w, 0.4).size());
}

}  // namespace

BENCHMARK(BM_RunPoint)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RunPointSerial)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AllSensingRows)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_AllSensingRowsReference)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
