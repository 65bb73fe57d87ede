#include <filesystem>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "memcraft/embedding_store.hpp"
#include "memcraft/model_gateway.hpp"
#include "oracles/oracles.hpp"

using namespace memcraft;

namespace {

MemoryEntry entry(std::uint64_t id, MemType t, std::string content) {
  MemoryEntry e;
  e.id = EntryId{id};
  e.mem_type = t;
  e.timestamp = DateRange::single(*Date::parse("2024-01-01"));
  e.content = std::move(content);
  return e;
}

EmbedFn hash_embed(std::size_t dim = 64) {
  auto h = std::make_shared<HashEmbedder>(dim, 1);
  return [h](const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    for (const auto& t : texts) out.push_back(h->embed(t));
    return out;
  };
}

Vector gaussian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(dim);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(EmbeddingStore, UpsertCountsEntries) {
  EmbeddingStore store;
  std::vector<MemoryEntry> es{entry(1, MemType::episodic, "a"), entry(2, MemType::semantic, "b"),
                              entry(3, MemType::procedural, "c")};
  store.upsert(es, hash_embed());
  EXPECT_EQ(store.size(), 3u);
  EXPECT_EQ(store.dimension(), 64u);
}

TEST(EmbeddingStore, ReupsertReplacesVector) {
  EmbeddingStore store;
  std::vector<MemoryEntry> first{entry(1, MemType::episodic, "old text")};
  std::vector<MemoryEntry> second{entry(1, MemType::episodic, "brand new words")};
  store.upsert(first, hash_embed());
  store.upsert(second, hash_embed());
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(store.get(EntryId{1})->vector, normalized(HashEmbedder(64, 1).embed("brand new words")));
}

TEST(EmbeddingStore, EmptyContentEmbedsWithoutError) {
  EmbeddingStore store;
  std::vector<MemoryEntry> es{entry(1, MemType::semantic, "")};
  EXPECT_NO_THROW(store.upsert(es, hash_embed()));
  EXPECT_EQ(store.get(EntryId{1})->vector, HashEmbedder(64, 1).embed(""));
}

TEST(EmbeddingStore, DimensionMismatchRejected) {
  EmbeddingStore store;
  store.upsert_vectors({{EntryId{1}, MemType::episodic, Vector(8, 1.0)}});
  EXPECT_THROW(store.upsert_vectors({{EntryId{2}, MemType::episodic, Vector(4, 1.0)}}), DimensionMismatch);
  EXPECT_THROW(store.top_k_vector(Vector(4, 1.0), 1), DimensionMismatch);
  EXPECT_EQ(store.size(), 1u);
}

TEST(EmbeddingStore, KLargerThanPopulation) {
  EmbeddingStore store;
  std::vector<MemoryEntry> es{entry(1, MemType::episodic, "only one")};
  store.upsert(es, hash_embed());
  EXPECT_EQ(store.top_k("anything", 10, std::nullopt, hash_embed()).ranked.size(), 1u);
}

TEST(EmbeddingStore, EmptyStoreReturnsNothing) {
  EmbeddingStore store;
  auto r = store.top_k("q", 20, std::nullopt, hash_embed());
  EXPECT_TRUE(r.ranked.empty());
  EXPECT_EQ(r.query_text, "q");
}

TEST(EmbeddingStore, MatchesBruteForceOn50Entries) {
  std::mt19937_64 rng(50);
  EmbeddingStore store;
  std::vector<std::pair<std::uint64_t, std::vector<double>>> raw;
  std::vector<EmbeddedEntry> batch;
  for (std::uint64_t id = 1; id <= 50; ++id) {
    auto v = gaussian(16, rng);
    raw.emplace_back(id, v);
    batch.push_back({EntryId{id}, kEntryTypes[id % 3], v});
  }
  store.upsert_vectors(batch);
  const auto q = gaussian(16, rng);
  const auto got = store.top_k_vector(normalized(q), 5);
  const auto want = oracle::brute_force_top_k(raw, q, 5);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].entry_id.value, want[i]);
}

TEST(EmbeddingStore, TiesBreakByAscendingId) {
  EmbeddingStore store;
  const Vector v{1.0, 2.0, 3.0};
  store.upsert_vectors({{EntryId{9}, MemType::episodic, v}, {EntryId{4}, MemType::semantic, v},
                        {EntryId{6}, MemType::procedural, v}});
  const auto r = store.top_k_vector(normalized(v), 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].entry_id.value, 4u);
  EXPECT_EQ(r[1].entry_id.value, 6u);
  EXPECT_EQ(r[2].entry_id.value, 9u);
}

TEST(EmbeddingStore, ScoresBoundedAndSorted) {
  std::mt19937_64 rng(8);
  EmbeddingStore store;
  std::vector<EmbeddedEntry> batch;
  for (std::uint64_t id = 1; id <= 100; ++id) batch.push_back({EntryId{id}, kEntryTypes[id % 3], gaussian(8, rng)});
  store.upsert_vectors(batch);
  const auto r = store.top_k_vector(normalized(gaussian(8, rng)), 100);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_GE(r[i].score, -1.0);
    EXPECT_LE(r[i].score, 1.0);
    if (i > 0) EXPECT_FALSE(ranks_before(r[i], r[i - 1]));
  }
}

TEST(EmbeddingStore, FilterSoundness) {
  std::mt19937_64 rng(9);
  EmbeddingStore store;
  std::vector<EmbeddedEntry> batch;
  for (std::uint64_t id = 1; id <= 60; ++id) batch.push_back({EntryId{id}, kEntryTypes[id % 3], gaussian(8, rng)});
  store.upsert_vectors(batch);
  const TypeFilter only_epi = std::set<MemType>{MemType::episodic};
  const auto r = store.top_k_vector(normalized(gaussian(8, rng)), 50, only_epi);
  EXPECT_EQ(r.size(), 20u);
  for (const auto& s : r) EXPECT_EQ(s.mem_type, MemType::episodic);
}

TEST(EmbeddingStore, VectorsStoredUnitNorm) {
  EmbeddingStore store;
  store.upsert_vectors({{EntryId{1}, MemType::episodic, Vector{3.0, 4.0}}});
  EXPECT_NEAR(l2_norm(store.get(EntryId{1})->vector), 1.0, 1e-12);
}

TEST(EmbeddingStore, CountsByType) {
  RetrievalResult r;
  r.ranked = {{EntryId{1}, MemType::episodic, 0.9}, {EntryId{2}, MemType::episodic, 0.8},
              {EntryId{3}, MemType::procedural, 0.1}};
  EXPECT_EQ(r.counts_by_type(), (PerEntryType<std::size_t>{2, 0, 1}));
}

TEST(EmbeddingStore, SaveLoadRoundTrip) {
  std::mt19937_64 rng(10);
  EmbeddingStore store;
  std::vector<EmbeddedEntry> batch;
  for (std::uint64_t id = 1; id <= 10; ++id) batch.push_back({EntryId{id}, kEntryTypes[id % 3], gaussian(8, rng)});
  store.upsert_vectors(batch);
  const auto file = std::filesystem::temp_directory_path() / "memcraft_vectors_test.jsonl";
  store.save(file);
  const auto loaded = EmbeddingStore::load(file);
  ASSERT_EQ(loaded.size(), store.size());
  for (const auto& e : store.snapshot()) {
    const auto other = loaded.get(e.entry_id);
    ASSERT_TRUE(other);
    EXPECT_EQ(other->mem_type, e.mem_type);
    for (std::size_t i = 0; i < e.vector.size(); ++i) EXPECT_NEAR(other->vector[i], e.vector[i], 1e-15);
  }
  std::filesystem::remove(file);
}

TEST(EmbeddingStore, ConcurrentReadersSeeWholeBatches) {
  EmbeddingStore store;
  std::mt19937_64 rng(11);
  std::atomic<bool> stop{false};
  std::atomic<int> bad{0};
  const auto q = normalized(gaussian(8, rng));
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      while (!stop) {
        const auto n = store.top_k_vector(q, 1000).size();
        if (n % 10 != 0) ++bad;  // batches are published 10 at a time
      }
    });
  }
  for (std::uint64_t b = 0; b < 50; ++b) {
    std::vector<EmbeddedEntry> batch;
    for (std::uint64_t i = 0; i < 10; ++i) batch.push_back({EntryId{b * 10 + i + 1}, MemType::episodic, gaussian(8, rng)});
    store.upsert_vectors(batch);
  }
  stop = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(store.size(), 500u);
}
