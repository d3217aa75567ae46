#include <random>

#include <benchmark/benchmark.h>

#include "schurerk/integrate.hpp"
#include "schurerk/phi.hpp"
#include "schurerk/problems.hpp"

using namespace schurerk;

namespace {

Matrix random_matrix(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = Complex(dist(rng), dist(rng));
  return a;
}

void BM_Expm(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = random_matrix(n, 1) / static_cast<double>(n);
  for (auto _ : state) benchmark::DoNotOptimize(expm(a));
}
BENCHMARK(BM_Expm)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

void BM_PhiMatrix(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = -0.3 * dirichlet_laplacian(static_cast<int>(n));
  for (auto _ : state) benchmark::DoNotOptimize(phi_matrix(3, a));
}
BENCHMARK(BM_PhiMatrix)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

void BM_SchurRandom(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(schur_decompose(a));
}
BENCHMARK(BM_SchurRandom)->RangeMultiplier(2)->Range(8, 256)->Unit(benchmark::kMillisecond);

void BM_SchurLaplacian(benchmark::State& state) {
  const Matrix a = dirichlet_laplacian(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(schur_decompose(a));
}
BENCHMARK(BM_SchurLaplacian)->RangeMultiplier(2)->Range(15, 255)->Unit(benchmark::kMillisecond);

void BM_PhiScalar(benchmark::State& state) {
  const Complex z(-3.7, 0.4);
  for (auto _ : state) {
    for (int k = 0; k <= 3; ++k) benchmark::DoNotOptimize(phi_scalar(k, z));
  }
}
BENCHMARK(BM_PhiScalar);

// Fixed-step run of the oscillatory problem; arg 1 selects the formulation.
void BM_FixedRun(benchmark::State& state) {
  const auto form = state.range(1) ? Formulation::vector : Formulation::matrix;
  const auto p = oscillatory(static_cast<int>(state.range(0)), 6.0);
  RunOptions opts;
  opts.record_trajectory = false;
  for (auto _ : state) benchmark::DoNotOptimize(integrate_fixed(p, tableau("ERK43ZB"), 0.3, form, opts));
}
BENCHMARK(BM_FixedRun)->ArgsProduct({{31, 63, 127}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
