#include "memcraft/memory_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "memcraft/digest.hpp"

namespace memcraft {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::add: return "add";
    case Origin::update: return "update";
    case Origin::merge: return "merge";
  }
  return "?";
}

std::string_view to_string(EntryOpKind k) {
  switch (k) {
    case EntryOpKind::add: return "ADD";
    case EntryOpKind::update: return "UPDATE";
    case EntryOpKind::merge: return "MERGE";
    case EntryOpKind::skip: return "SKIP";
  }
  return "?";
}

bool action_allowed(MemType type, EntryOpKind kind) {
  switch (type) {
    case MemType::episodic: return kind != EntryOpKind::skip;
    case MemType::semantic: return kind != EntryOpKind::merge;
    case MemType::procedural: return kind == EntryOpKind::add || kind == EntryOpKind::update;
  }
  return false;
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

const MemoryEntry* EntrySection::find(EntryId id) const {
  // entries_ is sorted by id because ids are assigned monotonically.
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const MemoryEntry& e, EntryId v) { return e.id < v; });
  if (it == entries_.end() || it->id != id) return nullptr;
  return &*it;
}

MemoryBank::MemoryBank(std::size_t core_capacity_chars)
    : sections_{EntrySection{MemType::episodic}, EntrySection{MemType::semantic},
                EntrySection{MemType::procedural}} {
  core_.capacity_chars = core_capacity_chars;
}

std::size_t MemoryBank::entry_count() const {
  std::size_t n = 0;
  for (const auto& s : sections_) n += s.size();
  return n;
}

const MemoryEntry* MemoryBank::find(EntryId id) const {
  for (const auto& s : sections_) {
    if (const auto* e = s.find(id)) return e;
  }
  return nullptr;
}

MemoryBank MemoryBank::with_core_text(std::string text) const {
  MemoryBank copy = *this;
  copy.core_.text = std::move(text);
  return copy;
}

MemoryBank MemoryBank::with_session_cursor(std::size_t cursor) const {
  MemoryBank copy = *this;
  copy.session_cursor_ = cursor;
  return copy;
}

MemoryBank MemoryBank::restore(CoreBlock core, PerEntryType<std::vector<MemoryEntry>> sections,
                               std::size_t session_cursor, std::uint64_t next_id) {
  MemoryBank bank(core.capacity_chars);
  bank.core_ = std::move(core);
  bank.session_cursor_ = session_cursor;
  std::uint64_t max_id = 0;
  for (auto t : kEntryTypes) {
    auto& entries = sections[index_of(t)];
    std::sort(entries.begin(), entries.end(),
              [](const MemoryEntry& a, const MemoryEntry& b) { return a.id < b.id; });
    for (const auto& e : entries) max_id = std::max(max_id, e.id.value);
    bank.sections_[index_of(t)].entries_ = std::move(entries);
  }
  bank.next_id_ = next_id == 0 ? max_id + 1 : next_id;
  if (bank.next_id_ <= max_id) {
    throw CorruptBank("stored id counter " + std::to_string(next_id) +
                      " is not above the largest entry id " + std::to_string(max_id));
  }
  // Capacity is a post-compression property, not a structural one.
  auto problems = check_invariants(bank);
  std::erase_if(problems, [](const std::string& p) { return p.starts_with("core:"); });
  if (!problems.empty()) throw CorruptBank(problems.front());
  return bank;
}

CoreApplyResult apply_core_op(const MemoryBank& bank, const CoreOp& op,
                              const Tokenizer& tokenizer) {
  const std::string& old_text = bank.core().text;
  std::string next;
  switch (op.kind) {
    case CoreOpKind::append:
      if (op.content.empty()) next = old_text;
      else next = old_text.empty() ? op.content : old_text + "\n" + op.content;
      break;
    case CoreOpKind::replace: {
      if (op.old_text.empty()) throw ReplaceTargetNotFound("REPLACE with empty old_text");
      const auto pos = old_text.find(op.old_text);
      if (pos == std::string::npos) {
        throw ReplaceTargetNotFound("REPLACE target not found in core memory");
      }
      next = old_text;
      next.replace(pos, op.old_text.size(), op.new_text);
      break;
    }
    case CoreOpKind::rewrite:
      next = op.content;
      break;
  }
  const long delta =
      static_cast<long>(tokenizer(next)) - static_cast<long>(tokenizer(old_text));
  return {bank.with_core_text(std::move(next)), delta};
}

std::optional<DateRange> episodic_prefix(std::string_view content) {
  const auto colon = content.find(':');
  if (colon == std::string_view::npos || colon < 10 || colon > 22) return std::nullopt;
  return DateRange::parse(content.substr(0, colon));
}

namespace {

std::string strip_leading(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return std::string(s.substr(i));
}

// Normalizes an episodic entry so its content prefix and timestamp agree.
// `forced` overrides whatever prefix the content carries (Merge ranges).
std::pair<DateRange, std::string> stamp_episodic(const std::string& content, Date session_date,
                                                 std::optional<DateRange> forced) {
  const auto prefix = episodic_prefix(content);
  if (!forced && prefix) return {*prefix, content};
  const DateRange ts = forced ? *forced : DateRange::single(session_date);
  std::string body = content;
  if (prefix) body = strip_leading(std::string_view(content).substr(content.find(':') + 1));
  return {ts, ts.to_string() + ": " + body};
}

}  // namespace

MemoryBank apply_entry_ops(const MemoryBank& bank, MemType type, std::span<const EntryOp> ops,
                           Date session_date) {
  MemoryBank out = bank;
  auto& section = out.sections_[index_of(type)];
  for (const auto& op : ops) {
    if (!action_allowed(type, op.kind)) {
      throw IllegalAction(std::string(to_string(op.kind)) + " is not an action of " +
                          std::string(to_string(type)) + " memory");
    }
    if (op.kind == EntryOpKind::skip) continue;

    std::vector<EntryId> refs = op.target_refs;
    if (op.kind == EntryOpKind::add && !refs.empty()) {
      throw IllegalAction("ADD must not carry target references");
    }
    if (op.kind == EntryOpKind::update && refs.size() != 1) {
      throw IllegalAction("UPDATE needs exactly one target");
    }
    if (op.kind == EntryOpKind::merge) {
      std::sort(refs.begin(), refs.end());
      refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
      if (refs.size() < 2) throw IllegalAction("MERGE needs at least two distinct targets");
    }
    std::optional<DateRange> span;
    for (auto id : refs) {
      const auto* target = section.find(id);
      if (!target) {
        throw DanglingReference("entry " + std::to_string(id.value) + " does not exist in " +
                                std::string(to_string(type)) + " memory");
      }
      if (!span) {
        span = target->timestamp;
      } else {
        span->first = std::min(span->first, target->timestamp.first);
        span->last = std::max(span->last, target->timestamp.last);
      }
    }

    MemoryEntry entry;
    entry.id = EntryId{out.next_id_++};
    entry.mem_type = type;
    entry.refs = std::move(refs);
    entry.origin = op.kind == EntryOpKind::add      ? Origin::add
                   : op.kind == EntryOpKind::update ? Origin::update
                                                    : Origin::merge;
    if (type == MemType::episodic) {
      auto forced = op.kind == EntryOpKind::merge ? span : std::nullopt;
      auto [ts, text] = stamp_episodic(op.memory_content, session_date, forced);
      entry.timestamp = ts;
      entry.content = std::move(text);
    } else if (op.kind == EntryOpKind::merge) {
      entry.timestamp = *span;
      entry.content = op.memory_content;
    } else {
      entry.timestamp = DateRange::single(session_date);
      entry.content = op.memory_content;
    }
    section.entries_.push_back(std::move(entry));
  }
  return out;
}

std::vector<std::string> check_invariants(const MemoryBank& bank) {
  std::vector<std::string> problems;
  if (bank.core().length() > bank.core().capacity_chars) {
    problems.push_back("core: text length " + std::to_string(bank.core().length()) +
                       " exceeds capacity " + std::to_string(bank.core().capacity_chars));
  }
  std::set<EntryId> seen;
  for (auto t : kEntryTypes) {
    const auto& section = bank.section(t);
    const std::string where = std::string(to_string(t)) + " entry ";
    for (const auto& e : section.entries()) {
      const std::string id = where + std::to_string(e.id.value);
      if (!seen.insert(e.id).second) problems.push_back(id + ": duplicate id");
      if (e.id >= bank.next_id()) problems.push_back(id + ": id not below the counter");
      if (e.mem_type != t) problems.push_back(id + ": stored in the wrong section");
      const std::size_t n = e.refs.size();
      if ((e.origin == Origin::add && n != 0) || (e.origin == Origin::update && n != 1) ||
          (e.origin == Origin::merge && n < 2)) {
        problems.push_back(id + ": reference count does not match origin");
      }
      for (auto r : e.refs) {
        if (r >= e.id) {
          problems.push_back(id + ": reference to a non-older entry " + std::to_string(r.value));
        } else if (!section.contains(r)) {
          problems.push_back(id + ": dangling reference " + std::to_string(r.value));
        }
      }
      if (t == MemType::episodic) {
        const auto prefix = episodic_prefix(e.content);
        if (!prefix || *prefix != e.timestamp) {
          problems.push_back(id + ": content prefix disagrees with timestamp");
        }
      }
    }
  }
  return problems;
}

namespace {

ordered_json entry_to_json(const MemoryEntry& e) {
  ordered_json j;
  j["id"] = e.id.value;
  j["mem_type"] = to_string(e.mem_type);
  j["timestamp"] = e.timestamp.to_string();
  j["content"] = e.content;
  auto refs = ordered_json::array();
  for (auto r : e.refs) refs.push_back(r.value);
  j["refs"] = std::move(refs);
  j["origin"] = to_string(e.origin);
  return j;
}

MemoryEntry entry_from_json(const nlohmann::json& j) {
  MemoryEntry e;
  e.id = EntryId{j.at("id").get<std::uint64_t>()};
  const auto type = parse_mem_type(j.at("mem_type").get<std::string>());
  if (!type) throw CorruptBank("unknown mem_type in entry " + std::to_string(e.id.value));
  e.mem_type = *type;
  const auto ts = DateRange::parse(j.at("timestamp").get<std::string>());
  if (!ts) throw CorruptBank("bad timestamp in entry " + std::to_string(e.id.value));
  e.timestamp = *ts;
  e.content = j.at("content").get<std::string>();
  for (const auto& r : j.at("refs")) e.refs.push_back(EntryId{r.get<std::uint64_t>()});
  const auto origin = j.at("origin").get<std::string>();
  if (origin == "add") {
    e.origin = Origin::add;
  } else if (origin == "update") {
    e.origin = Origin::update;
  } else if (origin == "merge") {
    e.origin = Origin::merge;
  } else {
    throw CorruptBank("unknown origin '" + origin + "'");
  }
  return e;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << data;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptBank("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json meta_json(const MemoryBank& bank) {
  ordered_json meta;
  meta["capacity_chars"] = bank.core().capacity_chars;
  meta["session_cursor"] = bank.session_cursor();
  meta["next_id"] = bank.next_id().value;
  return meta;
}

std::string section_jsonl(const EntrySection& section) {
  std::string out;
  for (const auto& e : section.entries()) {
    out += entry_to_json(e).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

void save_bank(const MemoryBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "core.txt", bank.core().text);
  for (auto t : kEntryTypes) {
    write_file(dir / (std::string(to_string(t)) + ".jsonl"), section_jsonl(bank.section(t)));
  }
  write_file(dir / "meta.json", meta_json(bank).dump(2) + "\n");
}

MemoryBank load_bank(const std::filesystem::path& dir) {
  CoreBlock core;
  core.text = read_file(dir / "core.txt");
  std::size_t cursor = 0;
  std::uint64_t next_id = 0;
  if (std::filesystem::exists(dir / "meta.json")) {
    const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    core.capacity_chars = meta.value("capacity_chars", std::size_t{5000});
    cursor = meta.value("session_cursor", std::size_t{0});
    next_id = meta.value("next_id", std::uint64_t{0});
  }
  PerEntryType<std::vector<MemoryEntry>> sections;
  for (auto t : kEntryTypes) {
    const auto path = dir / (std::string(to_string(t)) + ".jsonl");
    if (!std::filesystem::exists(path)) continue;
    std::istringstream lines(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        sections[index_of(t)].push_back(entry_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& ex) {
        throw CorruptBank(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
      }
    }
  }
  return MemoryBank::restore(std::move(core), std::move(sections), cursor, next_id);
}

std::string serialize_bank(const MemoryBank& bank) {
  std::string out = meta_json(bank).dump();
  out += "\n--core--\n";
  out += bank.core().text;
  for (auto t : kEntryTypes) {
    out += "\n--" + std::string(to_string(t)) + "--\n";
    out += section_jsonl(bank.section(t));
  }
  return out;
}

std::string bank_digest(const MemoryBank& bank) { return sha256_hex(serialize_bank(bank)); }

}  // namespace memcraft
