#include <psymeter/data.hpp>
#include <psymeter/eigen.hpp>
#include <psymeter/factor_analysis.hpp>
#include <psymeter/fairness.hpp>
#include <psymeter/simulator.hpp>
#include <psymeter/stats.hpp>

#include <benchmark/benchmark.h>

using namespace psymeter;

namespace {

ScoredTest factor_sample(std::size_t factors, std::size_t per_factor, std::size_t n) {
  FactorModelSpec s;
  s.loadings = simple_structure(factors, per_factor, 0.7);
  s.factor_correlations = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(factors),
                                                    static_cast<Eigen::Index>(factors));
  s.n = n;
  s.seed = 1;
  const Eigen::MatrixXd x = generate_factor_scores(s);
  return ScoredTest(participant_names(n), item_names(static_cast<std::size_t>(x.cols())), x,
                    TestType::person, -1e9, 1e9);
}

void BM_Jacobi(benchmark::State& state) {
  const auto items = static_cast<std::size_t>(state.range(0));
  const auto c = correlation_matrix(factor_sample(3, items / 3, 500));
  for (auto _ : state) benchmark::DoNotOptimize(eigen_symmetric(c.values));
}
BENCHMARK(BM_Jacobi)->Arg(12)->Arg(30)->Arg(60);

void BM_CorrelationMatrix(benchmark::State& state) {
  const auto s = factor_sample(3, 4, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(correlation_matrix(s));
}
BENCHMARK(BM_CorrelationMatrix)->Arg(300)->Arg(3000);

void BM_PafPromax(benchmark::State& state) {
  const auto c = correlation_matrix(factor_sample(3, static_cast<std::size_t>(state.range(0)), 500));
  for (auto _ : state) benchmark::DoNotOptimize(rotate_promax(paf(c, 3)));
}
BENCHMARK(BM_PafPromax)->Arg(4)->Arg(10);

void BM_ParallelAnalysis(benchmark::State& state) {
  const auto s = factor_sample(3, 4, 300);
  ParallelOptions o;
  o.replicates = static_cast<std::size_t>(state.range(0));
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(parallel_analysis(s, o));
}
BENCHMARK(BM_ParallelAnalysis)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_MantelHaenszel(benchmark::State& state) {
  FactorModelSpec base;
  base.loadings = simple_structure(1, 10, 0.7);
  base.factor_correlations = Eigen::MatrixXd::Identity(1, 1);
  base.n = static_cast<std::size_t>(state.range(0));
  base.seed = 3;
  base.likert = LikertBounds{0, 1};
  auto d = generate_dif_data(base, {"item01"}, DifKind::uniform, 0.5);
  ScaleSpec binary;
  const auto scored = score(d.responses, binary);
  BinaryGroups g;
  g.membership = d.groups;
  for (auto _ : state) benchmark::DoNotOptimize(mantel_haenszel_dif(scored, g, "item01"));
}
BENCHMARK(BM_MantelHaenszel)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
