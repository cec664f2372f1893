#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "phylograd/engine.hpp"
#include "phylograd/model_config.hpp"
#include "phylograd/simulate.hpp"

using namespace phylograd;

namespace {

struct Fixture {
  Phylogeny tree;
  ModelInstance model;
  PatternizedAlignment data;
};

Fixture fixture(int tips, int columns, int states, std::uint64_t seed = 7) {
  Rng rng(seed);
  Phylogeny tree = random_tree(tips, rng, 0.02, 0.2);
  ModelConfig cfg;
  if (states == 61) {
    cfg.model = "codon-m0";
    cfg.kappa = 2.0;
    cfg.omega = 0.3;
  } else {
    cfg = random_gtr_config(rng);
  }
  ModelInstance model = build_model(cfg);
  const RawAlignment raw = simulate_alignment(tree, model, columns, rng);
  return {std::move(tree), std::move(model), uncompressed_patterns(raw)};
}

BackendConfig backend_config(int workers) {
  BackendConfig cfg;
  if (workers > 1) {
    cfg.kind = BackendKind::parallel;
    cfg.workers = workers;
  }
  return cfg;
}

// Args: tips, columns, states, workers.
void BM_FullGradient(benchmark::State& state) {
  const Fixture f = fixture(state.range(0), state.range(1), state.range(2));
  Backend backend(backend_config(state.range(3)));
  LikelihoodEngine engine(f.tree, f.model, f.data, backend);
  for (auto _ : state) benchmark::DoNotOptimize(engine.full_gradient());
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_FullGradient)
    ->ArgNames({"N", "C", "S", "workers"})
    ->Args({16, 1000, 4, 1})
    ->Args({64, 1000, 4, 1})
    ->Args({128, 1000, 4, 1})
    ->Args({16, 256, 61, 1})
    ->Args({16, 256, 61, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

void BM_PostOrder(benchmark::State& state) {
  const Fixture f = fixture(state.range(0), state.range(1), state.range(2));
  Backend backend;
  LikelihoodEngine engine(f.tree, f.model, f.data, backend);
  engine.update_transition_matrices();
  for (auto _ : state) {
    engine.postorder_traverse();
    benchmark::DoNotOptimize(engine.log_likelihood());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_PostOrder)
    ->ArgNames({"N", "C", "S"})
    ->Args({64, 1000, 4})
    ->Args({16, 256, 61})
    ->Unit(benchmark::kMillisecond);

void BM_PreOrderAndGradient(benchmark::State& state) {
  const Fixture f = fixture(state.range(0), state.range(1), state.range(2));
  Backend backend;
  LikelihoodEngine engine(f.tree, f.model, f.data, backend);
  engine.update_transition_matrices();
  engine.postorder_traverse();
  for (auto _ : state) {
    engine.preorder_traverse();
    engine.gradient_columns();
    benchmark::DoNotOptimize(engine.reduce_columns());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_PreOrderAndGradient)
    ->ArgNames({"N", "C", "S"})
    ->Args({64, 1000, 4})
    ->Args({16, 256, 61})
    ->Unit(benchmark::kMillisecond);

void BM_Transpose(benchmark::State& state) {
  const int states = static_cast<int>(state.range(0));
  const int padded = padded_state_count(states);
  const int branches = 2 * static_cast<int>(state.range(1)) - 2;
  TransitionMatrixSet m(states, padded, branches, 1), t(states, padded, branches, 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : m.data()) v = u(rng);
  Backend backend;
  for (auto _ : state) {
    backend.transpose_all(m, t);
    benchmark::DoNotOptimize(t.data().data());
  }
}
BENCHMARK(BM_Transpose)->ArgNames({"S", "N"})->Args({61, 62})->Args({20, 62});

void BM_DeterministicReduction(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : v) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(reduce_deterministic(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeterministicReduction)->Arg(1024)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
