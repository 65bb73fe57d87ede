#include "memcraft/action_codec.hpp"

#include <algorithm>

namespace memcraft {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::malformed_json: return "MalformedJson";
    case FailureKind::unknown_action: return "UnknownAction";
    case FailureKind::missing_field: return "MissingField";
    case FailureKind::illegal_action_for_type: return "IllegalActionForType";
    case FailureKind::replace_target_not_found: return "ReplaceTargetNotFound";
    case FailureKind::resolution_failure: return "ResolutionFailure";
    case FailureKind::agent_unavailable: return "AgentUnavailable";
  }
  return "?";
}

std::string ParseFailure::describe() const {
  return std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail);
}

namespace {

ParseFailure fail(FailureKind kind, std::string detail) { return {kind, std::move(detail)}; }

std::string excerpt(std::string_view s, std::size_t n = 80) {
  std::string out = utf8_truncate(s, n);
  if (out.size() < s.size()) out += "...";
  return out;
}

// Index one past the '}' closing the object opened at `open`, or npos.
std::size_t match_object(std::string_view raw, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

const json* string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return nullptr;
  return &*it;
}

}  // namespace

std::optional<json> extract_first_json_object(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const auto close = match_object(raw, open);
    if (close == std::string_view::npos) continue;
    auto parsed = json::parse(raw.substr(open, close - open), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

Result<CoreOp, ParseFailure> parse_core(std::string_view raw) {
  const auto obj = extract_first_json_object(raw);
  if (!obj) return fail(FailureKind::malformed_json, "no JSON object found");
  const auto* op = string_field(*obj, "operation");
  if (!op) return fail(FailureKind::missing_field, "operation");
  const auto& name = op->get_ref<const std::string&>();
  if (name == "APPEND" || name == "REWRITE") {
    const auto* content = string_field(*obj, "content");
    if (!content) return fail(FailureKind::missing_field, "content");
    return name == "APPEND" ? CoreOp::append(content->get<std::string>())
                            : CoreOp::rewrite(content->get<std::string>());
  }
  if (name == "REPLACE") {
    const auto* old_text = string_field(*obj, "old_text");
    if (!old_text || old_text->get_ref<const std::string&>().empty()) {
      return fail(FailureKind::missing_field, "old_text");
    }
    const auto* new_text = string_field(*obj, "new_text");
    if (!new_text) return fail(FailureKind::missing_field, "new_text");
    return CoreOp::replace(old_text->get<std::string>(), new_text->get<std::string>());
  }
  return fail(FailureKind::unknown_action, "core operation '" + excerpt(name, 40) + "'");
}

Result<std::vector<RawEntryOp>, ParseFailure> parse_entry_ops(std::string_view raw, MemType type) {
  const auto obj = extract_first_json_object(raw);
  if (!obj) return fail(FailureKind::malformed_json, "no JSON object found");
  auto ops_it = obj->find("operations");
  if (ops_it == obj->end()) return fail(FailureKind::missing_field, "operations");
  if (!ops_it->is_array()) return fail(FailureKind::malformed_json, "operations is not an array");

  std::vector<RawEntryOp> out;
  out.reserve(ops_it->size());
  std::size_t index = 0;
  for (const auto& item : *ops_it) {
    const std::string at = "operations[" + std::to_string(index++) + "]";
    if (!item.is_object()) return fail(FailureKind::malformed_json, at + " is not an object");
    const auto* action = string_field(item, "action");
    if (!action) return fail(FailureKind::missing_field, at + ".action");
    const auto& name = action->get_ref<const std::string&>();

    RawEntryOp op;
    if (name == "ADD") {
      op.kind = EntryOpKind::add;
    } else if (name == "UPDATE") {
      op.kind = EntryOpKind::update;
    } else if (name == "MERGE") {
      op.kind = EntryOpKind::merge;
    } else if (name == "SKIP") {
      op.kind = EntryOpKind::skip;
    } else {
      return fail(FailureKind::unknown_action, at + ".action '" + excerpt(name, 40) + "'");
    }
    if (!action_allowed(type, op.kind)) {
      return fail(FailureKind::illegal_action_for_type,
                  std::string(to_string(op.kind)) + " in " + std::string(to_string(type)) +
                      " memory");
    }

    if (op.kind == EntryOpKind::skip) {
      const auto* reason = string_field(item, "reason");
      if (!reason) return fail(FailureKind::missing_field, at + ".reason");
      op.reason = reason->get<std::string>();
      out.push_back(std::move(op));
      continue;
    }

    const auto* memory = string_field(item, "memory");
    // Some models emit "new_memory" for UPDATE.
    if (!memory && op.kind == EntryOpKind::update) memory = string_field(item, "new_memory");
    if (!memory) return fail(FailureKind::missing_field, at + ".memory");
    op.memory = memory->get<std::string>();

    if (op.kind == EntryOpKind::update) {
      const auto* old_memory = string_field(item, "old_memory");
      if (!old_memory) return fail(FailureKind::missing_field, at + ".old_memory");
      op.old_memory = old_memory->get<std::string>();
    } else if (op.kind == EntryOpKind::merge) {
      auto it = item.find("old_memories");
      if (it == item.end() || !it->is_array() || it->size() < 2) {
        return fail(FailureKind::missing_field, at + ".old_memories (two or more entries)");
      }
      for (const auto& m : *it) {
        if (!m.is_string()) return fail(FailureKind::malformed_json, at + ".old_memories holds a non-string");
        op.old_memories.push_back(m.get<std::string>());
      }
    }
    out.push_back(std::move(op));
  }
  return out;
}

std::string to_canonical_json(const CoreOp& op) {
  ordered_json j;
  switch (op.kind) {
    case CoreOpKind::append:
      j["operation"] = "APPEND";
      j["content"] = op.content;
      break;
    case CoreOpKind::rewrite:
      j["operation"] = "REWRITE";
      j["content"] = op.content;
      break;
    case CoreOpKind::replace:
      j["operation"] = "REPLACE";
      j["old_text"] = op.old_text;
      j["new_text"] = op.new_text;
      break;
  }
  return j.dump();
}

std::string to_canonical_json(std::span<const RawEntryOp> ops) {
  ordered_json arr = ordered_json::array();
  for (const auto& op : ops) {
    ordered_json j;
    j["action"] = to_string(op.kind);
    switch (op.kind) {
      case EntryOpKind::add:
        j["memory"] = op.memory;
        break;
      case EntryOpKind::update:
        j["old_memory"] = op.old_memory;
        j["memory"] = op.memory;
        break;
      case EntryOpKind::merge:
        j["old_memories"] = op.old_memories;
        j["memory"] = op.memory;
        break;
      case EntryOpKind::skip:
        j["reason"] = op.reason;
        break;
    }
    arr.push_back(std::move(j));
  }
  ordered_json root;
  root["operations"] = std::move(arr);
  return root.dump();
}

Result<std::vector<EntryOp>, ParseFailure> resolve_references(std::span<const RawEntryOp> ops,
                                                              const EntrySection& section,
                                                              const EmbedFn& embed,
                                                              double threshold) {
  const auto entries = section.entries();

  // Pass 1: exact matches; collect texts that need the similarity path.
  std::vector<std::string> pending;
  auto exact = [&](const std::string& text) -> std::optional<EntryId> {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      if (it->content == text) return it->id;
    }
    return std::nullopt;
  };
  for (const auto& op : ops) {
    if (op.kind == EntryOpKind::update && !exact(op.old_memory)) pending.push_back(op.old_memory);
    if (op.kind == EntryOpKind::merge) {
      for (const auto& m : op.old_memories) {
        if (!exact(m)) pending.push_back(m);
      }
    }
  }

  // Pass 2: one embedding batch for unresolved texts plus the section.
  std::vector<std::pair<std::string, std::optional<EntryId>>> similar;
  if (!pending.empty() && !entries.empty()) {
    std::vector<std::string> texts = pending;
    for (const auto& e : entries) texts.push_back(e.content);
    const auto vectors = embed(texts);
    if (vectors.size() != texts.size()) throw DimensionMismatch("embedder returned a short batch");
    for (std::size_t q = 0; q < pending.size(); ++q) {
      const Vector query = normalized(vectors[q]);
      std::optional<EntryId> best;
      double best_score = -2.0;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& v = vectors[pending.size() + i];
        if (v.size() != query.size()) throw DimensionMismatch("embedding dimensions differ");
        const double score = dot(query, normalized(v));
        if (score >= best_score) {  // later (newer) entries win ties
          best_score = score;
          best = entries[i].id;
        }
      }
      similar.emplace_back(pending[q], best_score >= threshold ? best : std::nullopt);
    }
  }
  auto resolve = [&](const std::string& text) -> std::optional<EntryId> {
    if (auto id = exact(text)) return id;
    for (const auto& [t, id] : similar) {
      if (t == text) return id;
    }
    return std::nullopt;
  };

  std::vector<EntryOp> out;
  out.reserve(ops.size());
  for (const auto& op : ops) {
    EntryOp resolved;
    resolved.kind = op.kind;
    resolved.memory_content = op.memory;
    resolved.skip_reason = op.reason;
    if (op.kind == EntryOpKind::update) {
      auto id = resolve(op.old_memory);
      if (!id) {
        return fail(FailureKind::resolution_failure,
                    "UPDATE target not in " + std::string(to_string(section.type())) +
                        " memory: '" + excerpt(op.old_memory) + "'");
      }
      resolved.target_refs.push_back(*id);
    } else if (op.kind == EntryOpKind::merge) {
      for (const auto& m : op.old_memories) {
        auto id = resolve(m);
        if (!id) {
          return fail(FailureKind::resolution_failure,
                      "MERGE source not in " + std::string(to_string(section.type())) +
                          " memory: '" + excerpt(m) + "'");
        }
        if (std::find(resolved.target_refs.begin(), resolved.target_refs.end(), *id) ==
            resolved.target_refs.end()) {
          resolved.target_refs.push_back(*id);
        }
      }
      if (resolved.target_refs.size() < 2) {
        return fail(FailureKind::resolution_failure,
                    "MERGE sources resolve to fewer than two distinct entries");
      }
      std::sort(resolved.target_refs.begin(), resolved.target_refs.end());
    }
    out.push_back(std::move(resolved));
  }
  return out;
}

bool ValidityReport::applicable(Component c, GateMode mode) const {
  if (mode == GateMode::per_rollout) return valid;
  return of(c).valid;
}

ValidityReport validate_rollout(const AgentOutputs& outputs, const MemoryBank& bank,
                                const EmbedFn& embed, double resolve_threshold) {
  ValidityReport report;
  auto reject = [&](Component c, const ParseFailure& f) {
    auto& tv = report.per_type[index_of(c)];
    tv.valid = false;
    tv.diagnostics.push_back(f.describe());
  };

  if (const auto& raw = outputs[Component::core]; !raw) {
    reject(Component::core, {FailureKind::agent_unavailable, "no output"});
  } else if (auto parsed = parse_core(*raw); !parsed) {
    reject(Component::core, parsed.error());
  } else if (parsed.value().kind == CoreOpKind::replace &&
             bank.core().text.find(parsed.value().old_text) == std::string::npos) {
    reject(Component::core, {FailureKind::replace_target_not_found,
                             "'" + excerpt(parsed.value().old_text) + "' not in core memory"});
  } else {
    report.per_type[index_of(Component::core)].valid = true;
    report.core_op = std::move(parsed).value();
  }

  for (auto t : kEntryTypes) {
    const auto c = component_of(t);
    const auto& raw = outputs[c];
    if (!raw) {
      reject(c, {FailureKind::agent_unavailable, "no output"});
      continue;
    }
    auto parsed = parse_entry_ops(*raw, t);
    if (!parsed) {
      reject(c, parsed.error());
      continue;
    }
    auto resolved = resolve_references(parsed.value(), bank.section(t), embed, resolve_threshold);
    if (!resolved) {
      reject(c, resolved.error());
      continue;
    }
    report.per_type[index_of(c)].valid = true;
    report.entry_ops[index_of(t)] = std::move(resolved).value();
  }

  report.valid = std::all_of(report.per_type.begin(), report.per_type.end(),
                             [](const TypeValidity& v) { return v.valid; });
  return report;
}

}  // namespace memcraft
