#include <benchmark/benchmark.h>

#include <random>

#include "blochtk/matrix.hpp"

using namespace blochtk;

namespace {

CMatrix rand_herm(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix h(n, n);
  for (int i = 0; i < n; ++i) {
    h(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      cplx v(g(rng), g(rng));
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  }
  return h;
}

void BM_herm_eig(benchmark::State& state) {
  std::mt19937_64 rng(1);
  CMatrix h = rand_herm(static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(herm_eig(h, 1e-12));
}
BENCHMARK(BM_herm_eig)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_unitary_eig(benchmark::State& state) {
  std::mt19937_64 rng(2);
  CMatrix u = exp_i(rand_herm(static_cast<int>(state.range(0)), rng));
  for (auto _ : state) benchmark::DoNotOptimize(unitary_eig(u, 1e-10));
}
BENCHMARK(BM_unitary_eig)->Arg(2)->Arg(4)->Arg(8);

void BM_pfaffian(benchmark::State& state) {
  std::mt19937_64 rng(3);
  int n = static_cast<int>(state.range(0));
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      cplx v(g(rng), g(rng));
      a(i, j) = v;
      a(j, i) = -v;
    }
  for (auto _ : state) benchmark::DoNotOptimize(pfaffian(a));
}
BENCHMARK(BM_pfaffian)->Arg(4)->Arg(8)->Arg(16);

void BM_polar(benchmark::State& state) {
  std::mt19937_64 rng(4);
  int n = static_cast<int>(state.range(0));
  CMatrix x = exp_i(rand_herm(n, rng)) + cplx(0.05) * rand_herm(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(polar_unitary(x));
}
BENCHMARK(BM_polar)->Arg(2)->Arg(4)->Arg(8);

void BM_exp_i(benchmark::State& state) {
  std::mt19937_64 rng(5);
  CMatrix h = rand_herm(static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(exp_i(h));
}
BENCHMARK(BM_exp_i)->Arg(2)->Arg(4)->Arg(8);

} // namespace

BENCHMARK_MAIN();
