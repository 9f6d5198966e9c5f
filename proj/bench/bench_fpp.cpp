// Serial reference vs OpenMP worker pool on the main Monte Carlo kernels.
// On a single-core machine both variants run at the same speed.

#include "fpp/diagnostics.hpp"
#include "fpp/parallel.hpp"
#include "fpp/shape.hpp"

#include <benchmark/benchmark.h>

using namespace fpp;

namespace {

BrokenLineModel model() {
  BrokenLineModel m;
  m.cost = BrokenLineCost(LagrangianSpec::iso_quad(2, 1.0));
  return m;
}

// One (direction grid x seeds) scan; jobs = 1 takes the serial path.
void BM_ShapeScan(benchmark::State& st) {
  const Model m = model();
  SamplingOptions o;
  o.jobs = static_cast<int>(st.range(0));
  const auto grid = DirectionGrid::make(2, 8);
  for (auto _ : st) benchmark::DoNotOptimize(shape_scan(m, grid, {20.0}, 8, o));
  st.counters["workers"] = resolve_jobs(o.jobs);
}
BENCHMARK(BM_ShapeScan)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

// Independent geodesic solves through run_tasks_serial and run_tasks.
void BM_Solves(benchmark::State& st) {
  const Model m = model();
  const bool parallel = st.range(0) != 0;
  const std::size_t n = 16;
  SamplingOptions o;
  auto task = [&](std::size_t i) {
    return solve_from_origin(m, derive_seed(9, i), {make_vec({20, 0})}, o).solves.front().action;
  };
  for (auto _ : st) {
    if (parallel) benchmark::DoNotOptimize(run_tasks<double>(n, 0, task));
    else benchmark::DoNotOptimize(run_tasks_serial<double>(n, task));
  }
  st.counters["workers"] = parallel ? resolve_jobs(0) : 1;
}
BENCHMARK(BM_Solves)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SingleGeodesic(benchmark::State& st) {
  const Model m = model();
  const double t = static_cast<double>(st.range(0));
  const auto env = sample_environment(m, 3, initial_half_width(m, t));
  for (auto _ : st) benchmark::DoNotOptimize(min_action(m, env, Vec::Zero(2), make_vec({t, 0})));
}
BENCHMARK(BM_SingleGeodesic)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_LatticeAnimals(benchmark::State& st) {
  const auto pts = sample_points(Window::cube(2, -9, 10), 4);
  const auto f = poisson_count_field(pts);
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(lattice_animal_max(f, 2, n));
}
BENCHMARK(BM_LatticeAnimals)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
