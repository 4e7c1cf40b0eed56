// Microbenchmarks for the hot paths: layer seminorm sweeps, trace averaging,
// slab integration, Muckenhoupt scans, and pointwise extension work.

#include <benchmark/benchmark.h>

#include <vector>

#include "tracelab/lab.hpp"
#include "tracelab/norms.hpp"
#include "tracelab/numerics.hpp"
#include "tracelab/operators.hpp"
#include "tracelab/weight.hpp"

namespace {

using namespace tracelab;

void bench_besov_seminorm(benchmark::State& state) {
  Rng rng(1);
  auto g = random_grid(int(state.range(0)), 1, rng);
  const BesovParams bp{1, 1, 2};
  for (auto _ : state)
    benchmark::DoNotOptimize(besov_seminorm(g, bp).total);
}
BENCHMARK(bench_besov_seminorm)->Arg(4)->Arg(5)->Arg(6);

void bench_trace_level(benchmark::State& state) {
  auto f = suite_fields(1)[0].second;
  const Box region(Point{-2.0}, Point{2.0});
  const int k = int(state.range(0));
  int flagged = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(trace_level(f, k, region, &flagged).values.size());
}
BENCHMARK(bench_trace_level)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

void bench_sobolev_slabs(benchmark::State& state) {
  auto f = suite_fields(1)[1].second;
  const WeightParams wp{2, 1, 3, 1};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        sobolev_slab_masses(f, wp, 0x1p-10, 4.0, 4).levels.size());
}
BENCHMARK(bench_sobolev_slabs)->Unit(benchmark::kMillisecond);

void bench_ap_scan_closed_form(benchmark::State& state) {
  const WeightParams wp{2, 1, 3, 1};  // integer log power: recurrence path
  for (auto _ : state)
    benchmark::DoNotOptimize(ap_scan(wp, 64).fitted_exponent);
}
BENCHMARK(bench_ap_scan_closed_form);

void bench_ap_scan_adaptive(benchmark::State& state) {
  const WeightParams wp{2, 0.5, 2.5, 1};  // real log power: quadrature path
  for (auto _ : state)
    benchmark::DoNotOptimize(ap_scan(wp, 64).fitted_exponent);
}
BENCHMARK(bench_ap_scan_adaptive)->Unit(benchmark::kMillisecond);

void bench_extend_eval(benchmark::State& state) {
  Rng rng(3);
  auto g = random_grid(3, 1, rng);
  const PartitionSpec spec{};
  Rng prng(4);
  std::vector<Point> pts;
  for (int i = 0; i < 256; ++i)
    pts.push_back(Point{prng.uniform(-0.5, 1.5), 0.01 + prng.uniform01()});
  for (auto _ : state) {
    double acc = 0;
    for (const auto& y : pts) acc += extend_eval(g, y, spec);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(bench_extend_eval);

void bench_partition_sum(benchmark::State& state) {
  const PartitionSpec spec{};
  Rng prng(9);
  std::vector<Point> pts;
  for (int i = 0; i < 256; ++i)
    pts.push_back(Point{prng.uniform(-2.0, 2.0), 1.0 - prng.uniform01()});
  for (auto _ : state) {
    double acc = 0;
    for (const auto& y : pts)
      for (const auto& q : active_partition_cubes(y, spec))
        acc += partition_value(q, y, spec);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(bench_partition_sum);

}  // namespace

BENCHMARK_MAIN();
