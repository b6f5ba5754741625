#include <benchmark/benchmark.h>

#include <random>

#include "specdict/solver.hpp"

using namespace specdict;

namespace {

struct Problem {
  Eigen::MatrixXd D;
  Eigen::VectorXd y;
};

Problem make_problem(Eigen::Index p, Eigen::Index k, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.05, 1.05);
  Problem prob;
  prob.D.resize(p, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < p; ++r) prob.D(r, c) = dist(rng);
    prob.D.col(c).normalize();
  }
  prob.y.resize(p);
  for (Eigen::Index r = 0; r < p; ++r) prob.y[r] = dist(rng);
  return prob;
}

}  // namespace

static void BM_SolveWeights(benchmark::State& state) {
  Problem prob = make_problem(513, state.range(0), 42);
  SolverConfig cfg;
  for (auto _ : state) {
    auto [x, report] = solve_weights(prob.y, prob.D, cfg);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_SolveWeights)->Arg(50)->Arg(100)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_SolveOracle(benchmark::State& state) {
  Problem prob = make_problem(32, 8, 7);
  for (auto _ : state) {
    Eigen::VectorXd x = solve_oracle(prob.y, prob.D, 100000);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_SolveOracle)->Unit(benchmark::kMillisecond);

static void BM_KlDivergence(benchmark::State& state) {
  Problem prob = make_problem(513, 2, 9);
  Eigen::VectorXd yhat = prob.D.col(0) * 0.7 + prob.D.col(1) * 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_divergence(prob.y, yhat));
  }
}
BENCHMARK(BM_KlDivergence);

BENCHMARK_MAIN();
