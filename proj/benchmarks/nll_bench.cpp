#include <random>

#include <benchmark/benchmark.h>

#include "mvcorr/covariance.hpp"
#include "mvcorr/oracle/dense.hpp"

namespace {

using namespace mvcorr;

struct Instance {
  BatchCovariance cov;
  Vec residual;
};

Instance make_instance(Index batch, Index window, Index rank) {
  std::mt19937_64 rng(7);
  BatchCovariance cov = oracle::random_batch_covariance(window, batch, rank, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec r(cov.size());
  for (Index i = 0; i < r.size(); ++i) r[i] = normal(rng);
  return {std::move(cov), std::move(r)};
}

void BM_StructuredNll(benchmark::State& state) {
  const Instance inst = make_instance(state.range(0), 4, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_nll(inst.cov, inst.residual).value);
  }
  state.SetComplexityN(state.range(0));
}

void BM_DenseNll(benchmark::State& state) {
  const Instance inst = make_instance(state.range(0), 4, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::dense_nll(oracle::assemble_dense(inst.cov), inst.residual));
  }
  state.SetComplexityN(state.range(0));
}

void BM_StructuredGradient(benchmark::State& state) {
  const Instance inst = make_instance(state.range(0), 4, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_nll_gradient(inst.cov, inst.residual).terms.value);
  }
}

}  // namespace

BENCHMARK(BM_StructuredNll)->RangeMultiplier(2)->Range(8, 512)->Complexity();
BENCHMARK(BM_DenseNll)->RangeMultiplier(2)->Range(8, 512)->Complexity();
BENCHMARK(BM_StructuredGradient)->RangeMultiplier(2)->Range(8, 512);

BENCHMARK_MAIN();
