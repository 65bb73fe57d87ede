#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memcraft/types.hpp"

namespace memcraft {

// Engine-assigned, monotone per bank, never reused.
struct EntryId {
  std::uint64_t value = 0;
  auto operator<=>(const EntryId&) const = default;
};

enum class Origin : std::uint8_t { add, update, merge };

std::string_view to_string(Origin o);

struct MemoryEntry {
  EntryId id;
  MemType mem_type = MemType::episodic;
  DateRange timestamp;
  std::string content;
  std::vector<EntryId> refs;  // entries this one updates or merges
  Origin origin = Origin::add;

  bool operator==(const MemoryEntry&) const = default;
};

class MemoryBank;
struct EntryOp;

// Append-only list of entries of a single memory type.
class EntrySection {
 public:
  explicit EntrySection(MemType type) : type_(type) {}

  MemType type() const { return type_; }
  std::span<const MemoryEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const MemoryEntry* find(EntryId id) const;
  bool contains(EntryId id) const { return find(id) != nullptr; }

  bool operator==(const EntrySection&) const = default;

 private:
  friend class MemoryBank;
  friend MemoryBank apply_entry_ops(const MemoryBank&, MemType, std::span<const EntryOp>, Date);
  MemType type_;
  std::vector<MemoryEntry> entries_;
};

struct CoreBlock {
  std::string text;
  std::size_t capacity_chars = 5000;

  std::size_t length() const { return utf8_length(text); }
  bool operator==(const CoreBlock&) const = default;
};

enum class CoreOpKind : std::uint8_t { append, replace, rewrite };

struct CoreOp {
  CoreOpKind kind = CoreOpKind::append;
  std::string content;   // append / rewrite
  std::string old_text;  // replace
  std::string new_text;  // replace

  static CoreOp append(std::string c) { return {CoreOpKind::append, std::move(c), {}, {}}; }
  static CoreOp rewrite(std::string c) { return {CoreOpKind::rewrite, std::move(c), {}, {}}; }
  static CoreOp replace(std::string old_text, std::string new_text) {
    return {CoreOpKind::replace, {}, std::move(old_text), std::move(new_text)};
  }
  bool operator==(const CoreOp&) const = default;
};

enum class EntryOpKind : std::uint8_t { add, update, merge, skip };

std::string_view to_string(EntryOpKind k);

// Resolved entry operation: targets are ids, not text.
struct EntryOp {
  EntryOpKind kind = EntryOpKind::add;
  std::string memory_content;
  std::vector<EntryId> target_refs;
  std::string skip_reason;

  bool operator==(const EntryOp&) const = default;
};

// Whether `kind` belongs to the action space of `type`.
bool action_allowed(MemType type, EntryOpKind kind);

class MemoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ReplaceTargetNotFound : public MemoryError {
 public:
  using MemoryError::MemoryError;
};
class DanglingReference : public MemoryError {
 public:
  using MemoryError::MemoryError;
};
class IllegalAction : public MemoryError {
 public:
  using MemoryError::MemoryError;
};
class CorruptBank : public MemoryError {
 public:
  using MemoryError::MemoryError;
};

// Counts tokens in a piece of memory text. Must be deterministic and
// monotone under concatenation.
using Tokenizer = std::function<std::size_t(std::string_view)>;

// Number of maximal runs of non-whitespace characters.
std::size_t whitespace_token_count(std::string_view text);

// Four-component memory bank. A value type: operations return new banks and
// copies are fully independent snapshots.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t core_capacity_chars = 5000);

  const CoreBlock& core() const { return core_; }
  const EntrySection& section(MemType t) const { return sections_[index_of(t)]; }
  std::size_t session_cursor() const { return session_cursor_; }
  EntryId next_id() const { return EntryId{next_id_}; }
  std::size_t entry_count() const;
  const MemoryEntry* find(EntryId id) const;

  MemoryBank with_core_text(std::string text) const;
  MemoryBank with_session_cursor(std::size_t cursor) const;

  bool operator==(const MemoryBank&) const = default;

  // Reassemble a bank from persisted parts; throws CorruptBank when an
  // invariant does not hold.
  // next_id = 0 derives the counter from the largest stored id.
  static MemoryBank restore(CoreBlock core, PerEntryType<std::vector<MemoryEntry>> sections,
                            std::size_t session_cursor, std::uint64_t next_id = 0);

 private:
  friend MemoryBank apply_entry_ops(const MemoryBank&, MemType, std::span<const EntryOp>, Date);

  CoreBlock core_;
  PerEntryType<EntrySection> sections_;
  std::size_t session_cursor_ = 0;
  std::uint64_t next_id_ = 1;
};

struct CoreApplyResult {
  MemoryBank bank;
  long delta_tokens = 0;  // token_count(new core) - token_count(old core)
};

// Applies one Core operation. Capacity is not enforced here.
CoreApplyResult apply_core_op(const MemoryBank& bank, const CoreOp& op,
                              const Tokenizer& tokenizer = whitespace_token_count);

// Applies a list of entry operations to one section. Existing entries are
// never removed; Update and Merge append new entries that reference their
// targets. All-or-nothing: on error the input bank is untouched.
MemoryBank apply_entry_ops(const MemoryBank& bank, MemType type, std::span<const EntryOp> ops,
                           Date session_date);

// Leading "YYYY-MM-DD:" or "YYYY-MM-DD..YYYY-MM-DD:" of an episodic entry.
std::optional<DateRange> episodic_prefix(std::string_view content);

// Empty when the bank satisfies every structural invariant.
std::vector<std::string> check_invariants(const MemoryBank& bank);

// Directory persistence: core.txt, {episodic,semantic,procedural}.jsonl and
// meta.json (capacity, session cursor, id counter).
void save_bank(const MemoryBank& bank, const std::filesystem::path& dir);
MemoryBank load_bank(const std::filesystem::path& dir);

// Canonical text serialization and its SHA-256.
std::string serialize_bank(const MemoryBank& bank);
std::string bank_digest(const MemoryBank& bank);

}  // namespace memcraft
