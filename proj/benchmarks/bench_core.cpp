#include "lowdim/degenerate_solver.hpp"
#include "lowdim/elliptic_measure.hpp"
#include "lowdim/regularized_distance.hpp"

#include <benchmark/benchmark.h>

using namespace lowdim;

namespace {

Box flat_box() {
  Vec lo(3), hi(3);
  lo << -2, -1.5, -1.5;
  hi << 2, 1.5, 1.5;
  return Box(lo, hi);
}

GridOptions grid(double h) {
  GridOptions o;
  o.h_min = h;
  o.h_max = 8 * h;
  o.band_width = 0.5 * h;
  return o;
}

void BM_DAlphaJet(benchmark::State& state) {
  const auto g = BoundarySet::graph(sine_graph(1, 3, 0.05), 4);
  const RegularizedDistance rd(g, sigma_quadrature(g, static_cast<int>(state.range(0)), Box::cube(1, -40, 40)), 1.0);
  Vec X(4);
  X << 0.3, 0.2, 0.5, -0.1;
  for (auto _ : state) benchmark::DoNotOptimize(rd.jet(X, 2).laplacian);
  state.counters["nodes"] = static_cast<double>(rd.all_weights().size());
}
BENCHMARK(BM_DAlphaJet)->Arg(8)->Arg(10)->Arg(12);

void BM_CantorJet(benchmark::State& state) {
  const auto g = BoundarySet::middle_thirds(3);
  Vec lo = Vec::Constant(3, -1), hi = Vec::Constant(3, 2);
  const RegularizedDistance rd(g, sigma_quadrature(g, static_cast<int>(state.range(0)), Box(lo, hi)),
                               1.0 - std::log(2.0) / std::log(3.0));
  Vec X(3);
  X << 0.5, 0.3, 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(rd.jet(X, 2).laplacian);
}
BENCHMARK(BM_CantorJet)->Arg(8)->Arg(12);

void BM_Assemble(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto g = BoundarySet::plane(1, 3);
  for (auto _ : state) {
    auto P = build_and_assemble(model_field(1, 3), flat_box(), g, grid(h));
    benchmark::DoNotOptimize(P.K.nonZeros());
  }
}
BENCHMARK(BM_Assemble)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto g = BoundarySet::plane(1, 3);
  const auto P = build_and_assemble(model_field(1, 3), flat_box(), g, grid(h));
  const auto data = dirichlet_data(*P.grid, [](const Vec& f) { return 1.0 / (1.0 + f[0] * f[0]); },
                                   [](const Vec&) { return 0.0; });
  SolverOptions o;
  o.method = SolverMethod::Iterative;
  for (auto _ : state) benchmark::DoNotOptimize(solve_dirichlet(P, data, o).values().data());
  state.counters["unknowns"] = static_cast<double>(P.interior_nodes.size());
}
BENCHMARK(BM_Solve)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MeasureAt(benchmark::State& state) {
  const auto g = BoundarySet::plane(1, 3);
  const auto P = build_and_assemble(model_field(1, 3), flat_box(), g, grid(1.0 / 16));
  Vec X(3);
  X << 0.0, 0.0, 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(measure_at(P, X).total());
}
BENCHMARK(BM_MeasureAt)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
