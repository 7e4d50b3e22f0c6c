#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "rost/cascade.hpp"
#include "rost/coalescent.hpp"
#include "rost/evolution.hpp"
#include "rost/partition.hpp"
#include "rost/rng.hpp"
#include "rost/serialize.hpp"
#include "rost/stats.hpp"

namespace {

rost::RpcParams reference_params() {
  rost::RpcParams p;
  p.q_levels = {0.2, 0.5};
  p.x_levels = {0.3, 0.6};
  return p;
}

void BM_PdSample(benchmark::State& state) {
  const std::size_t cap = static_cast<std::size_t>(state.range(0));
  rost::PdParams params;
  params.x = 0.5;
  rost::RngStream rng(42, 1);
  for (auto _ : state) {
    rost::MassPartition p = rost::sample_pd(params, cap, rng);
    benchmark::DoNotOptimize(p.atoms.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cap));
}

void BM_CascadeRecursive(benchmark::State& state) {
  const std::size_t cap = static_cast<std::size_t>(state.range(0));
  const rost::RpcParams params = reference_params();
  rost::RngStream rng(42, 2);
  for (auto _ : state) {
    rost::LevelStructure s = rost::sample_cascade_recursive(params, cap, rng);
    benchmark::DoNotOptimize(s.atoms.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cap));
}

void BM_CascadeTree(benchmark::State& state) {
  const std::size_t per_node = static_cast<std::size_t>(state.range(0));
  const rost::RpcParams params = reference_params();
  rost::RngStream rng(42, 3);
  for (auto _ : state) {
    rost::GenealogySample g = rost::build_rpc(params, per_node, rng);
    benchmark::DoNotOptimize(g.leaf_weights.data());
  }
}

void BM_ContinuousBuild(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  const rost::OrderParam op = reference_params().order_param();
  rost::RngStream rng(42, 4);
  for (auto _ : state) {
    rost::LevelStructure s = rost::build_continuous_structure(op, m, rng);
    benchmark::DoNotOptimize(s.atoms.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m));
}

void BM_CoalescentStep(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  rost::RngStream rng(42, 5);
  for (auto _ : state) {
    rost::CoalescentState st = rost::make_singletons(m);
    rost::semigroup_step(st, 0.5, rng);
    benchmark::DoNotOptimize(st.block_of.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m));
}

void BM_EvolveStep(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  rost::RngStream draw_rng(42, 6);
  const rost::LevelStructure base =
      rost::sample_cascade_recursive(reference_params(), 2048, draw_rng);
  rost::EvolutionConfig cfg;
  cfg.r = r;
  cfg.lambda = 1.0;
  rost::RngStream rng(42, 7);
  for (auto _ : state) {
    rost::PhiResult res = rost::phi(base, cfg, rng);
    benchmark::DoNotOptimize(res.state.atoms.data());
  }
}

void BM_KsTwoSample(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  rost::RngStream rng(42, 8);
  std::vector<double> xs(n), ys(n);
  for (double& v : xs) v = rng.next_normal();
  for (double& v : ys) v = rng.next_normal() * 1.1;
  for (auto _ : state) {
    rost::KsResult res = rost::ks_two_sample(xs, ys);
    benchmark::DoNotOptimize(res.d);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

void BM_SerializeRoundtrip(benchmark::State& state) {
  rost::RngStream rng(42, 9);
  const rost::LevelStructure s =
      rost::sample_cascade_recursive(reference_params(), 512, rng);
  for (auto _ : state) {
    std::string text = rost::structure_to_json(s);
    rost::LevelStructure back = rost::structure_from_json(text);
    benchmark::DoNotOptimize(back.atoms.data());
  }
}

}  // namespace

BENCHMARK(BM_PdSample)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_CascadeRecursive)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_CascadeTree)->RangeMultiplier(2)->Range(16, 64);
BENCHMARK(BM_ContinuousBuild)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_CoalescentStep)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_EvolveStep)->Arg(1)->Arg(2)->Arg(3);
BENCHMARK(BM_KsTwoSample)->RangeMultiplier(4)->Range(1024, 16384);
BENCHMARK(BM_SerializeRoundtrip);

BENCHMARK_MAIN();
