#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memcraft/memory_model.hpp"

namespace memcraft {

using Vector = std::vector<double>;

// Batch text -> vector function (one vector per input text).
using EmbedFn = std::function<std::vector<Vector>(const std::vector<std::string>&)>;

class DimensionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
// Unit-norm copy; throws std::invalid_argument on a zero vector.
Vector normalized(Vector v);

struct EmbeddedEntry {
  EntryId entry_id;
  MemType mem_type = MemType::episodic;
  Vector vector;  // unit norm
};

struct ScoredEntry {
  EntryId entry_id;
  MemType mem_type = MemType::episodic;
  double score = 0.0;  // cosine similarity

  bool operator==(const ScoredEntry&) const = default;
};

// Ranking order used everywhere: score descending, then id ascending.
bool ranks_before(const ScoredEntry& a, const ScoredEntry& b);

struct RetrievalResult {
  std::vector<ScoredEntry> ranked;
  std::string query_text;

  // Number of retrieved entries per memory type.
  PerEntryType<std::size_t> counts_by_type() const;
};

using TypeFilter = std::optional<std::set<MemType>>;

// Exact cosine index over entry memories. Readers (top_k) may run
// concurrently; upsert takes an exclusive lock and publishes a batch at once.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(const EmbeddingStore& other);
  EmbeddingStore& operator=(const EmbeddingStore& other);
  EmbeddingStore(EmbeddingStore&& other) noexcept;
  EmbeddingStore& operator=(EmbeddingStore&& other) noexcept;

  // Embeds each entry's content once; an existing id gets its vector replaced.
  void upsert(std::span<const MemoryEntry> entries, const EmbedFn& embed);
  void upsert_vectors(std::vector<EmbeddedEntry> entries);

  RetrievalResult top_k(std::string_view query, std::size_t k, const TypeFilter& filter,
                        const EmbedFn& embed) const;
  std::vector<ScoredEntry> top_k_vector(std::span<const double> query, std::size_t k,
                                        const TypeFilter& filter = std::nullopt) const;

  std::size_t size() const;
  std::size_t dimension() const;
  std::optional<EmbeddedEntry> get(EntryId id) const;
  std::vector<EmbeddedEntry> snapshot() const;

  // vectors.jsonl: {entry_id, mem_type, vector}
  void save(const std::filesystem::path& file) const;
  static EmbeddingStore load(const std::filesystem::path& file);

 private:
  mutable std::shared_mutex mutex_;
  std::map<EntryId, EmbeddedEntry> entries_;
  std::size_t dim_ = 0;
};

}  // namespace memcraft
