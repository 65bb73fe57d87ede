#include <random>

#include <benchmark/benchmark.h>

#include "memcraft/adrpo.hpp"
#include "memcraft/embedding_store.hpp"
#include "memcraft/reward_engine.hpp"

using namespace memcraft;

namespace {

EmbeddingStore random_store(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<EmbeddedEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(dim);
    for (auto& x : v) x = g(rng);
    entries.push_back({EntryId{i + 1}, kEntryTypes[i % 3], std::move(v)});
  }
  EmbeddingStore store;
  store.upsert_vectors(std::move(entries));
  return store;
}

void BM_TopK(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto store = random_store(n, 64, rng);
  std::normal_distribution<double> g;
  Vector q(64);
  for (auto& x : q) x = g(rng);
  q = normalized(q);
  for (auto _ : state) benchmark::DoNotOptimize(store.top_k_vector(q, 20));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_TopK)->Arg(100)->Arg(1000)->Arg(10000);

void BM_EntryPenalty(benchmark::State& state) {
  PenaltyParams p;
  long i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(entry_length_penalty(i % 3000, 1 + i % 700, p));
    ++i;
  }
}
BENCHMARK(BM_EntryPenalty);

void BM_ObjectiveGradient(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.5);
  ToyPolicy policy(6, 8), reference(6, 8);
  for (auto& x : policy.logits()) x = g(rng);
  for (auto& x : reference.logits()) x = g(rng);
  ToyGroup group;
  group.segment_lengths = {1, 2, 2, 1};
  for (int i = 0; i < 8; ++i) {
    ToyRollout r;
    r.tokens = reference.sample(rng);
    r.reward = std::uniform_real_distribution<double>()(rng);
    r.weights = assign_weights(kEntryTypes[i % 3], 4.0);
    group.rollouts.push_back(std::move(r));
  }
  AdrpoConfig cfg;
  cfg.kl_beta = 0.04;
  for (auto _ : state) benchmark::DoNotOptimize(objective_gradient(policy, reference, group, cfg));
}
BENCHMARK(BM_ObjectiveGradient);

}  // namespace
BENCHMARK_MAIN();
