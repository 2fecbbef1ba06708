#include <random>

#include <benchmark/benchmark.h>

#include "pccnmf/denoising.hpp"
#include "pccnmf/rank_scan.hpp"
#include "pccnmf/stability.hpp"

using namespace pccnmf;

namespace {

const DataMatrix& swimmer() {
  static const DataMatrix s = generate_swimmer();
  return s;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = d(gen);
  return m;
}

// Fixed iteration count so timings compare across ranks.
SolverOptions fixed_iterations(int n) {
  SolverOptions o;
  o.max_iters = n;
  o.rel_tol = 1e-300;
  return o;
}

void BM_FactorizeFrobenius(benchmark::State& state) {
  const int rank = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        factorize(swimmer(), rank, Loss::frobenius, 0, fixed_iterations(100)));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_FactorizeFrobenius)->Arg(8)->Arg(17)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_FactorizeKl(benchmark::State& state) {
  const int rank = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(factorize(swimmer(), rank, Loss::kl, 0, fixed_iterations(100)));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_FactorizeKl)->Arg(8)->Arg(17)->Unit(benchmark::kMillisecond);

void BM_Assignment(benchmark::State& state) {
  const Matrix cost = random_matrix(state.range(0), state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost));
}
BENCHMARK(BM_Assignment)->RangeMultiplier(4)->Range(8, 512);

void BM_Predictability(benchmark::State& state) {
  const Factorization f =
      factorize(swimmer(), static_cast<int>(state.range(0)), Loss::frobenius, 0,
                fixed_iterations(200));
  const PccModel pcc = derive_pcc(swimmer(), f);
  for (auto _ : state) benchmark::DoNotOptimize(predictability_check(pcc));
}
BENCHMARK(BM_Predictability)->Arg(8)->Arg(17)->Arg(30);

void BM_DerivePcc(benchmark::State& state) {
  const Factorization f = factorize(swimmer(), 17, Loss::frobenius, 0, fixed_iterations(50));
  for (auto _ : state) benchmark::DoNotOptimize(derive_pcc(swimmer(), f));
}
BENCHMARK(BM_DerivePcc);

void BM_Accuracy(benchmark::State& state) {
  const Matrix noisy = apply_flip_noise(swimmer(), 0.25, 1).values();
  const Matrix recon = truncated_svd(noisy, 30);
  for (auto _ : state) benchmark::DoNotOptimize(accuracy(swimmer().values(), recon));
}
BENCHMARK(BM_Accuracy);

}  // namespace
BENCHMARK_MAIN();
