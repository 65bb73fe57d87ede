#include "memcraft/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace memcraft {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector normalized(Vector v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("cannot normalize a zero vector");
  for (auto& x : v) x /= n;
  return v;
}

bool ranks_before(const ScoredEntry& a, const ScoredEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.entry_id < b.entry_id;
}

PerEntryType<std::size_t> RetrievalResult::counts_by_type() const {
  PerEntryType<std::size_t> counts{};
  for (const auto& r : ranked) ++counts[index_of(r.mem_type)];
  return counts;
}

EmbeddingStore::EmbeddingStore(const EmbeddingStore& other) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
  dim_ = other.dim_;
}

EmbeddingStore& EmbeddingStore::operator=(const EmbeddingStore& other) {
  if (this == &other) return *this;
  std::map<EntryId, EmbeddedEntry> entries;
  std::size_t dim = 0;
  {
    std::shared_lock lock(other.mutex_);
    entries = other.entries_;
    dim = other.dim_;
  }
  std::unique_lock lock(mutex_);
  entries_ = std::move(entries);
  dim_ = dim;
  return *this;
}

EmbeddingStore::EmbeddingStore(EmbeddingStore&& other) noexcept
    : entries_(std::move(other.entries_)), dim_(other.dim_) {}

EmbeddingStore& EmbeddingStore::operator=(EmbeddingStore&& other) noexcept {
  if (this != &other) {
    std::unique_lock lock(mutex_);
    entries_ = std::move(other.entries_);
    dim_ = other.dim_;
  }
  return *this;
}

void EmbeddingStore::upsert(std::span<const MemoryEntry> entries, const EmbedFn& embed) {
  if (entries.empty()) return;
  std::vector<std::string> texts;
  texts.reserve(entries.size());
  for (const auto& e : entries) texts.push_back(e.content);
  auto vectors = embed(texts);
  if (vectors.size() != entries.size()) {
    throw DimensionMismatch("embedder returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(entries.size()) + " texts");
  }
  std::vector<EmbeddedEntry> batch;
  batch.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    batch.push_back({entries[i].id, entries[i].mem_type, std::move(vectors[i])});
  }
  upsert_vectors(std::move(batch));
}

void EmbeddingStore::upsert_vectors(std::vector<EmbeddedEntry> batch) {
  if (batch.empty()) return;
  // Validate the whole batch before publishing any of it.
  std::size_t dim = batch.front().vector.size();
  if (dim == 0) throw DimensionMismatch("empty embedding vector");
  for (auto& e : batch) {
    if (e.vector.size() != dim) throw DimensionMismatch("embedding dimensions differ within a batch");
    e.vector = normalized(std::move(e.vector));
  }
  std::unique_lock lock(mutex_);
  if (dim_ != 0 && dim != dim_) {
    throw DimensionMismatch("store dimension is " + std::to_string(dim_) + ", got " +
                            std::to_string(dim));
  }
  dim_ = dim;
  for (auto& e : batch) entries_[e.entry_id] = std::move(e);
}

std::vector<ScoredEntry> EmbeddingStore::top_k_vector(std::span<const double> query, std::size_t k,
                                                      const TypeFilter& filter) const {
  if (k == 0) throw std::invalid_argument("top_k requires k > 0");
  std::shared_lock lock(mutex_);
  if (entries_.empty()) return {};
  if (query.size() != dim_) {
    throw DimensionMismatch("query dimension " + std::to_string(query.size()) +
                            " != store dimension " + std::to_string(dim_));
  }
  std::vector<ScoredEntry> scored;
  scored.reserve(entries_.size());
  for (const auto& [id, e] : entries_) {
    if (filter && !filter->contains(e.mem_type)) continue;
    const double s = std::clamp(dot(query, e.vector), -1.0, 1.0);
    scored.push_back({id, e.mem_type, s});
  }
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    ranks_before);
  scored.resize(n);
  return scored;
}

RetrievalResult EmbeddingStore::top_k(std::string_view query, std::size_t k,
                                      const TypeFilter& filter, const EmbedFn& embed) const {
  RetrievalResult result;
  result.query_text = std::string(query);
  if (k == 0) throw std::invalid_argument("top_k requires k > 0");
  if (size() == 0) return result;
  auto vectors = embed({result.query_text});
  if (vectors.size() != 1) throw DimensionMismatch("embedder returned no query vector");
  result.ranked = top_k_vector(normalized(std::move(vectors.front())), k, filter);
  return result;
}

std::size_t EmbeddingStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t EmbeddingStore::dimension() const {
  std::shared_lock lock(mutex_);
  return dim_;
}

std::optional<EmbeddedEntry> EmbeddingStore::get(EntryId id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<EmbeddedEntry> EmbeddingStore::snapshot() const {
  std::shared_lock lock(mutex_);
  std::vector<EmbeddedEntry> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

void EmbeddingStore::save(const std::filesystem::path& file) const {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& e : snapshot()) {
    nlohmann::ordered_json j;
    j["entry_id"] = e.entry_id.value;
    j["mem_type"] = to_string(e.mem_type);
    j["vector"] = e.vector;
    out << j.dump() << '\n';
  }
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<EmbeddedEntry> batch;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto type = parse_mem_type(j.at("mem_type").get<std::string>());
    if (!type) throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": bad mem_type");
    batch.push_back({EntryId{j.at("entry_id").get<std::uint64_t>()}, *type,
                     j.at("vector").get<Vector>()});
  }
  EmbeddingStore store;
  store.upsert_vectors(std::move(batch));
  return store;
}

}  // namespace memcraft
