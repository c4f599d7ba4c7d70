#include <benchmark/benchmark.h>

#include <random>

#include "rnlmf/clustering.hpp"
#include "rnlmf/datagen.hpp"
#include "rnlmf/kernels.hpp"
#include "rnlmf/prox.hpp"
#include "rnlmf/rpca.hpp"
#include "rnlmf/solver.hpp"

using namespace rnlmf;

namespace {

const datagen::Corrupted& noisy_data() {
  static const datagen::Corrupted data = [] {
    datagen::SynthSpec spec;
    spec.seed = 1;
    return datagen::inject_sparse_gaussian(datagen::gen_union_polynomial(spec).X, 0.3, 1.0, 2);
  }();
  return data;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Seed seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  return m;
}

void BM_KernelMatrix(benchmark::State& state) {
  const auto d = state.range(0);
  const Matrix& x = noisy_data().Xhat;
  const Matrix dict = gaussian(x.rows(), d, 3);
  const auto spec = kernels::KernelSpec::rbf(10.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::kernel_matrix(dict, x, spec));
}
BENCHMARK(BM_KernelMatrix)->Arg(60)->Arg(180)->Unit(benchmark::kMillisecond);

void BM_SigmaHeuristic(benchmark::State& state) {
  const Matrix& x = noisy_data().Xhat;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sigma_heuristic(x));
}
BENCHMARK(BM_SigmaHeuristic)->Unit(benchmark::kMillisecond);

void BM_Svt(benchmark::State& state) {
  const Matrix m = gaussian(180, 900, 4);
  for (auto _ : state) benchmark::DoNotOptimize(prox::svt(m, 5.0));
}
BENCHMARK(BM_Svt)->Unit(benchmark::kMillisecond);

void BM_Objective(benchmark::State& state) {
  const Matrix& x = noisy_data().Xhat;
  const Matrix d = gaussian(30, 180, 5);
  const Matrix c = gaussian(180, 900, 6) * 0.01;
  const Matrix e = Matrix::Zero(30, 900);
  for (auto _ : state)
    benchmark::DoNotOptimize(objective(d, c, e, x, 12.0, 5e-3, 1e-3, PenaltyC::FrobSq, PenaltyE::L1));
}
BENCHMARK(BM_Objective)->Unit(benchmark::kMillisecond);

void BM_FitIterations(benchmark::State& state) {
  const Matrix& x = noisy_data().Xhat;
  RnlmfConfig cfg;
  cfg.d = 180;
  cfg.max_iters = static_cast<int>(state.range(0));
  cfg.tol = 1e-300;
  cfg.strict_descent = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit(x, cfg));
}
BENCHMARK(BM_FitIterations)->Args({10, 0})->Args({10, 1})->Unit(benchmark::kMillisecond);

void BM_Rpca(benchmark::State& state) {
  const Matrix& x = noisy_data().Xhat;
  for (auto _ : state) benchmark::DoNotOptimize(rpca::rpca_admm(x));
}
BENCHMARK(BM_Rpca)->Unit(benchmark::kMillisecond);

void BM_ClusterCodes(benchmark::State& state) {
  const Matrix c = gaussian(180, 900, 7);
  clustering::ClusteringConfig cfg;
  cfg.k = 3;
  for (auto _ : state) benchmark::DoNotOptimize(clustering::cluster_codes(c, cfg));
}
BENCHMARK(BM_ClusterCodes)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
