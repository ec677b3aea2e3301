#include <benchmark/benchmark.h>

#include <random>

#include "survanchor/clusterlib.hpp"
#include "survanchor/coxnet.hpp"
#include "survanchor/survstats.hpp"

using namespace survanchor;

namespace {

SurvivalLabels labels(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> t(0.2);
  std::bernoulli_distribution e(0.6);
  SurvivalLabels y;
  for (std::size_t i = 0; i < n; ++i) {
    y.times.push_back(t(rng));
    y.events.push_back(e(rng) ? 1 : 0);
  }
  y.events[0] = 1;
  return y;
}

void BM_CoxLossAndGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto y = labels(n, rng);
  const Eigen::VectorXd s = Eigen::VectorXd::Random(static_cast<Eigen::Index>(n));
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(coxnet::cox_loss_and_gradient(s, y, g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CoxLossAndGradient)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_Concordance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto y = labels(n, rng);
  std::normal_distribution<double> normal;
  std::vector<double> risk(n);
  for (auto& r : risk) r = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(survstats::concordance_index(risk, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Concordance)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_VmfEm(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const Eigen::Index d = 8;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(200 * k), d);
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    mu[static_cast<Eigen::Index>(c % d)] = c < static_cast<std::size_t>(d) ? 1.0 : -1.0;
    x.middleRows(static_cast<Eigen::Index>(200 * c), 200) = clusterlib::sample_vmf(mu, 40.0, 200, rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(clusterlib::fit_vmf_mixture(x, {k, 0, 1e-6, 200}).log_likelihood);
  }
}
BENCHMARK(BM_VmfEm)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
