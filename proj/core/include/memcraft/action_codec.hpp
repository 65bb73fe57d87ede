#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "memcraft/embedding_store.hpp"
#include "memcraft/memory_model.hpp"
#include "memcraft/result.hpp"

namespace memcraft {

enum class FailureKind : std::uint8_t {
  malformed_json,
  unknown_action,
  missing_field,
  illegal_action_for_type,
  replace_target_not_found,
  resolution_failure,
  agent_unavailable,
};

std::string_view to_string(FailureKind k);

struct ParseFailure {
  FailureKind kind = FailureKind::malformed_json;
  std::string detail;

  std::string describe() const;
  bool operator==(const ParseFailure&) const = default;
};

// Entry operation as written by an agent: targets are referenced by text.
struct RawEntryOp {
  EntryOpKind kind = EntryOpKind::add;
  std::string memory;
  std::string old_memory;                 // UPDATE
  std::vector<std::string> old_memories;  // MERGE
  std::string reason;                     // SKIP

  bool operator==(const RawEntryOp&) const = default;
};

// First balanced {...} in `raw` that parses as a JSON object. Leading prose
// and markdown fences are skipped.
std::optional<nlohmann::json> extract_first_json_object(std::string_view raw);

// {"operation": "APPEND"|"REPLACE"|"REWRITE", "content"| "old_text"+"new_text"}
Result<CoreOp, ParseFailure> parse_core(std::string_view raw);

// {"operations": [{"action": "ADD"|"UPDATE"|"MERGE"|"SKIP", ...}]}
Result<std::vector<RawEntryOp>, ParseFailure> parse_entry_ops(std::string_view raw, MemType type);

std::string to_canonical_json(const CoreOp& op);
std::string to_canonical_json(std::span<const RawEntryOp> ops);

inline constexpr double kDefaultResolveThreshold = 0.95;

// Maps old_memory texts to entry ids: exact content match first, otherwise
// the most similar entry with cosine >= threshold. Among equal candidates the
// newest entry wins.
Result<std::vector<EntryOp>, ParseFailure> resolve_references(
    std::span<const RawEntryOp> ops, const EntrySection& section, const EmbedFn& embed,
    double threshold = kDefaultResolveThreshold);

enum class GateMode : std::uint8_t { per_rollout, per_type };

struct TypeValidity {
  bool valid = false;
  std::vector<std::string> diagnostics;
};

// Raw agent texts for one session; nullopt means the agent produced nothing
// (e.g. the gateway failed).
struct AgentOutputs {
  PerComponent<std::optional<std::string>> raw;

  std::optional<std::string>& operator[](Component c) { return raw[index_of(c)]; }
  const std::optional<std::string>& operator[](Component c) const { return raw[index_of(c)]; }
};

struct ValidityReport {
  bool valid = false;  // conjunction of the four per-type flags
  PerComponent<TypeValidity> per_type;
  std::optional<CoreOp> core_op;
  PerEntryType<std::vector<EntryOp>> entry_ops;

  const TypeValidity& of(Component c) const { return per_type[index_of(c)]; }
  // Whether `c`'s operations may be applied under `mode`.
  bool applicable(Component c, GateMode mode) const;
};

ValidityReport validate_rollout(const AgentOutputs& outputs, const MemoryBank& bank,
                                const EmbedFn& embed,
                                double resolve_threshold = kDefaultResolveThreshold);

}  // namespace memcraft
