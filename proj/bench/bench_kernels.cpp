#include <benchmark/benchmark.h>

#include <random>

#include "fimopt/kernels.hpp"

namespace {

fimopt::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  fimopt::Matrix m(rows, cols);
  for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

template <fimopt::Matrix (*Kernel)(const fimopt::Matrix&, const fimopt::Matrix&)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const fimopt::Matrix a = random_matrix(n, n, 1);
  const fimopt::Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <fimopt::Matrix (*Kernel)(const fimopt::Matrix&)>
void BM_Gram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const fimopt::Matrix g = random_matrix(n, 2 * n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

}  // namespace

BENCHMARK(BM_Matmul<fimopt::kernels::serial::matmul>)->Name("matmul/serial")->RangeMultiplier(2)->Range(32, 512);
BENCHMARK(BM_Matmul<fimopt::kernels::matmul>)->Name("matmul/omp")->RangeMultiplier(2)->Range(32, 512);
BENCHMARK(BM_Gram<fimopt::kernels::serial::gram_rows>)->Name("gram_rows/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_Gram<fimopt::kernels::gram_rows>)->Name("gram_rows/omp")->RangeMultiplier(2)->Range(32, 256);

BENCHMARK_MAIN();
