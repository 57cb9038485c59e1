#include "geoprof/batchlinalg.hpp"
#include "geoprof/likelihood.hpp"
#include "geoprof/matern.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace geoprof;

namespace {

Eigen::MatrixXd randomCoords(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Eigen::MatrixXd c(n, 2);
  for (int i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
  return c;
}

std::vector<NaturalParams> randomSets(std::size_t K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NaturalParams> out;
  for (std::size_t k = 0; k < K; ++k) {
    const double phiY = 1.0 + 3.0 * u(rng);
    out.emplace_back(phiY * (1.0 + u(rng)), phiY, u(rng) - 0.5, 0.3 + 3.0 * u(rng), 0.05 + u(rng));
  }
  return out;
}

void BM_MaternBatch(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const Eigen::MatrixXd coords = randomCoords(n, 1);
  const auto sets = randomSets(K, 2);
  MatrixBatch<double> V(K, static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (auto _ : state) {
    maternBatch<double>(coords, sets, V);
    benchmark::DoNotOptimize(V.data().data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * K));
}
BENCHMARK(BM_MaternBatch)->Args({64, 100})->Args({400, 100})->Unit(benchmark::kMillisecond);

template <typename T>
void BM_CholBatch(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const Eigen::MatrixXd coords = randomCoords(n, 3);
  const auto sets = randomSets(K, 4);
  MatrixBatch<T> V(K, static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  maternBatch<T>(coords, sets, V);
  for (auto _ : state) {
    auto f = cholBatch<T>(V);
    benchmark::DoNotOptimize(f.logDet.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * K));
}
BENCHMARK(BM_CholBatch<double>)->Args({64, 100})->Args({400, 100})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CholBatch<float>)->Args({64, 100})->Args({400, 100})->Unit(benchmark::kMillisecond);

void BM_EvaluateBatch(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const int n = 100;
  Dataset d;
  d.coords = randomCoords(n, 5);
  d.X.resize(n, 2);
  d.X.col(0).setOnes();
  d.X.col(1) = d.coords.col(0) / 10.0;
  d.covariateNames = {"(Intercept)", "x"};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y(i) = u(rng);
  const auto sets = randomSets(K, 7);
  std::vector<double> lambdas;
  for (int m = 0; m < 33; ++m) lambdas.push_back(-0.5 + m / 16.0);
  for (auto _ : state) {
    const LikGrid g = evaluateBatch(d, sets, lambdas, LikMode::ML);
    benchmark::DoNotOptimize(g.logLik.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * K));
}
BENCHMARK(BM_EvaluateBatch)->Arg(64)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
