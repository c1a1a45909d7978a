#include <benchmark/benchmark.h>

#include <cmath>

#include "spectra/asymptotics.hpp"
#include "spectra/harness.hpp"
#include "spectra/refsolver.hpp"

using namespace spectra;

namespace {

const BoxGeometry kBox({M_PI, M_PI});

const MatrixFourierPotential& reference_potential() {
  static const MatrixFourierPotential v = generate_random_potential(GeneratorSpec{}, kBox);
  return v;
}

void BM_AssembleT(benchmark::State& state) {
  auto p = directional_part(reference_potential(), 0);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_T(p, n));
}
BENCHMARK(BM_AssembleT)->Arg(64)->Arg(256);

void BM_SolveDirectional(benchmark::State& state) {
  auto p = directional_part(reference_potential(), 0);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_directional(p, n));
}
BENCHMARK(BM_SolveDirectional)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FullEigensolve(benchmark::State& state) {
  const double cutoff = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eigen_full(reference_potential(), cutoff));
  state.counters["size"] = 2.0 * build_orbits(kBox, cutoff).size();
}
BENCHMARK(BM_FullEigensolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_PathSums(benchmark::State& state) {
  const auto& v = reference_potential();
  auto params = AsymptoticParams::make(20, 0.04, 2, 17);
  auto table = coupling_table(v, 0, params);
  auto spectra = solve_directional(directional_part(v, 0), 64);
  ExpansionOptions opt;
  opt.strict_guards = false;
  const int k = static_cast<int>(state.range(0));
  State ref{0, 0, {0, 15}};
  for (auto _ : state) {
    // fresh context so the coupling caches are rebuilt every iteration
    ExpansionContext ctx(kBox, params, table, spectra, opt);
    benchmark::DoNotOptimize(ctx.path_sums(ref, ctx.lambda(ref), k));
  }
}
BENCHMARK(BM_PathSums)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ClassifyShell(benchmark::State& state) {
  auto params = AsymptoticParams::make(static_cast<double>(state.range(0)), 0.04, 2, 17);
  for (auto _ : state) benchmark::DoNotOptimize(classify_shell(kBox, params, Shell{}));
}
BENCHMARK(BM_ClassifyShell)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
