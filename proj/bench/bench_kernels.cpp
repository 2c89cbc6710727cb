// SPDX-License-Identifier: Apache-2.0
//
// Kernel benchmarks. Parallel kernels are paired with their serial references.
#include <benchmark/benchmark.h>

#include <random>

#include "cobid/kmeans.hpp"
#include "cobid/lp.hpp"
#include "cobid/simulation.hpp"

using namespace cobid;

namespace {

lp::Problem random_lp(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  lp::Problem P;
  for (int j = 0; j < cols; ++j) P.add_variable(0.0, 10.0, u(rng), "x" + std::to_string(j));
  for (int i = 0; i < rows; ++i) {
    std::vector<lp::Term> terms;
    for (int j = 0; j < cols; ++j)
      if (u(rng) < 0.4) terms.push_back({j, u(rng)});
    P.add_row(std::move(terms), lp::Relation::LessEqual, 5.0 + 10.0 * u(rng));
  }
  return P;
}

// Eighteen stages, three nodes per stage, three ID levels; prices vary by node and block.
MarkovLattice bench_lattice() {
  MarkovLattice lat;
  const int T = 18, K = 3;
  for (int t = 1; t <= T; ++t) {
    LatticeStage st;
    st.index = StageIndex::from_linear(t);
    for (int n = 0; n < K; ++n) {
      LatticeNode node;
      for (int b = 0; b < kBlocksPerDay; ++b) {
        node.da_prices[static_cast<size_t>(b)] = 60.0 + 15.0 * n + 10.0 * (b % 3);
        node.fcr_prices[static_cast<size_t>(b)] = 8.0 + 3.0 * n;
      }
      const double mid = node.da_prices[static_cast<size_t>(st.index.block - 1)];
      node.id_prices = {mid - 20.0, mid, mid + 25.0};
      node.id_probs = {0.15, 0.7, 0.15};
      st.nodes.push_back(node);
    }
    if (t > 1) {
      const int f = st.index.block;
      for (int i = 0; i < K; ++i) {
        std::vector<double> row(K, 0.0);
        if (f == 1 || f == 4) row = {0.5, 0.3, 0.2};
        else row[static_cast<size_t>(i)] = 1.0;
        st.transition.push_back(row);
      }
    }
    lat.stages.push_back(st);
  }
  lat.initial = {0.5, 0.3, 0.2};
  return lat;
}

struct Trained {
  MarkovLattice lattice = bench_lattice();
  StageModel model{lattice, BatterySpec{}, ModelOptions{}};
  Policy policy;
  Trained() {
    TrainConfig c;
    c.max_iterations = 100;
    policy = train(model, c);
  }
};

const Trained& trained() {
  static const Trained t;
  return t;
}

std::vector<Point> cluster_points(int n) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    Point p(18);
    for (auto& v : p) v = 4.0 * static_cast<double>(i % 4) + z(rng);
    pts.push_back(p);
  }
  return pts;
}

void BM_LpSolve(benchmark::State& state) {
  auto P = random_lp(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(lp::solve(P).objective);
}
BENCHMARK(BM_LpSolve)->Arg(20)->Arg(60)->Arg(120);

void BM_StageSolve(benchmark::State& state) {
  const auto& t = trained();
  const int stage = static_cast<int>(state.range(0));
  std::vector<double> x(static_cast<size_t>(t.model.incoming(stage).size()), 0.0);
  x[0] = 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_stage(t.model, t.policy, stage, 0, 1, x).record.stage_value);
}
BENCHMARK(BM_StageSolve)->Arg(4)->Arg(7)->Arg(15);

void BM_KMeans(benchmark::State& state) {
  auto pts = cluster_points(121);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, 5, 11).inertia);
}
BENCHMARK(BM_KMeans);

void BM_KMeansSerial(benchmark::State& state) {
  auto pts = cluster_points(121);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_serial(pts, 5, 11).inertia);
}
BENCHMARK(BM_KMeansSerial);

void BM_Simulate(benchmark::State& state) {
  const auto& t = trained();
  SimOptions o;
  o.runs = static_cast<int>(state.range(0));
  o.keep_stages = false;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(t.model, t.policy, o).size());
}
BENCHMARK(BM_Simulate)->Arg(100);

void BM_SimulateSerial(benchmark::State& state) {
  const auto& t = trained();
  SimOptions o;
  o.runs = static_cast<int>(state.range(0));
  o.keep_stages = false;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_serial(t.model, t.policy, o).size());
}
BENCHMARK(BM_SimulateSerial)->Arg(100);

void BM_TrainIterations(benchmark::State& state) {
  const auto lat = bench_lattice();
  StageModel model(lat, BatterySpec{}, ModelOptions{});
  TrainConfig c;
  c.max_iterations = static_cast<int>(state.range(0));
  c.parallel = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, c).iterations);
}
BENCHMARK(BM_TrainIterations)->Args({20, 1})->Args({20, 0})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
