#include "memcraft/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace memcraft {

using nlohmann::json;

std::string Session::transcript() const {
  std::string out;
  for (const auto& t : turns) {
    out += t.speaker;
    out += ": ";
    out += t.text;
    out += '\n';
  }
  return out;
}

std::string_view to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::generic: return "generic";
    case DatasetFormat::longmemeval: return "longmemeval";
    case DatasetFormat::locomo: return "locomo";
    case DatasetFormat::perltqa: return "perltqa";
  }
  return "?";
}

DatasetFormat parse_dataset_format(std::string_view s) {
  for (auto f : {DatasetFormat::generic, DatasetFormat::longmemeval, DatasetFormat::locomo,
                 DatasetFormat::perltqa}) {
    if (s == to_string(f)) return f;
  }
  throw UnknownFormat("unknown dataset format '" + std::string(s) +
                      "' (expected generic, longmemeval, locomo or perltqa)");
}

namespace {

struct RecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw RecordError("bad number '" + std::string(s) + "'");
  return v;
}

Date require_date(const std::optional<Date>& d, std::string_view raw) {
  if (!d) throw RecordError("unparseable date '" + std::string(raw) + "'");
  return *d;
}

// Scalars other than strings (LoCoMo has numeric answers) keep their JSON text.
std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) throw RecordError("missing text value");
  if (v.is_structured()) throw RecordError("expected a scalar, got " + std::string(v.type_name()));
  return v.dump();
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw RecordError("expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw RecordError(std::string("missing field '") + key + "'");
  return *it;
}

std::vector<Turn> parse_turns(const json& arr, const char* speaker_key, const char* text_key) {
  if (!arr.is_array()) throw RecordError("turns must be an array");
  std::vector<Turn> turns;
  for (const auto& t : arr) {
    turns.push_back({scalar_text(field(t, speaker_key)), scalar_text(field(t, text_key))});
  }
  return turns;
}

std::optional<Date> parse_date_prefix(std::string_view s) {
  return s.size() >= 10 ? Date::parse(s.substr(0, 10)) : std::nullopt;
}

Dialogue parse_generic(const json& rec) {
  Dialogue d;
  d.dialogue_id = scalar_text(field(rec, "dialogue_id"));
  for (const auto& s : field(rec, "sessions")) {
    const auto ts = scalar_text(field(s, "timestamp"));
    d.sessions.push_back({require_date(Date::parse(ts), ts), parse_turns(field(s, "turns"), "speaker", "text")});
  }
  if (auto it = rec.find("questions"); it != rec.end()) {
    for (const auto& q : *it) {
      Question out;
      out.question = scalar_text(field(q, "question"));
      out.gold_answer = scalar_text(field(q, "gold_answer"));
      if (auto qd = q.find("question_date"); qd != q.end() && !qd->is_null()) {
        const auto raw = scalar_text(*qd);
        out.question_date = require_date(Date::parse(raw), raw);
      } else if (!d.sessions.empty()) {
        out.question_date = d.sessions.back().timestamp;
      }
      if (auto c = q.find("category"); c != q.end() && !c->is_null()) out.category = scalar_text(*c);
      d.questions.push_back(std::move(out));
    }
  }
  return d;
}

Dialogue parse_longmemeval(const json& rec) {
  Dialogue d;
  d.dialogue_id = scalar_text(field(rec, "question_id"));
  const auto& dates = field(rec, "haystack_dates");
  const auto& sessions = field(rec, "haystack_sessions");
  if (!dates.is_array() || !sessions.is_array() || dates.size() != sessions.size()) {
    throw RecordError("haystack_dates and haystack_sessions must be arrays of equal length");
  }
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto raw = scalar_text(dates[i]);
    d.sessions.push_back({require_date(parse_longmemeval_date(raw), raw),
                          parse_turns(sessions[i], "role", "content")});
  }
  Question q;
  q.question = scalar_text(field(rec, "question"));
  q.gold_answer = scalar_text(field(rec, "answer"));
  const auto raw = scalar_text(field(rec, "question_date"));
  q.question_date = require_date(parse_longmemeval_date(raw), raw);
  if (auto c = rec.find("question_type"); c != rec.end()) q.category = scalar_text(*c);
  d.questions.push_back(std::move(q));
  return d;
}

Dialogue parse_locomo(const json& rec) {
  Dialogue d;
  d.dialogue_id = scalar_text(field(rec, "sample_id"));
  const auto& conv = field(rec, "conversation");
  if (!conv.is_object()) throw RecordError("conversation must be an object");
  static const std::regex session_key(R"(session_(\d+))");
  std::vector<int> numbers;
  for (const auto& [key, value] : conv.items()) {
    std::smatch m;
    if (std::regex_match(key, m, session_key)) numbers.push_back(to_int(m[1].str()));
  }
  std::sort(numbers.begin(), numbers.end());
  for (int n : numbers) {
    const std::string key = "session_" + std::to_string(n);
    const auto raw = scalar_text(field(conv, (key + "_date_time").c_str()));
    d.sessions.push_back({require_date(parse_locomo_date(raw), raw), parse_turns(conv.at(key), "speaker", "text")});
  }
  if (d.sessions.empty()) throw RecordError("conversation has no sessions");
  for (const auto& q : field(rec, "qa")) {
    Question out;
    out.question = scalar_text(field(q, "question"));
    if (auto a = q.find("answer"); a != q.end() && !a->is_null()) {
      out.gold_answer = scalar_text(*a);
    } else {
      out.gold_answer = scalar_text(field(q, "adversarial_answer"));
    }
    if (auto c = q.find("category"); c != q.end()) out.category = scalar_text(*c);
    out.question_date = d.sessions.back().timestamp;
    d.questions.push_back(std::move(out));
  }
  return d;
}

// Our PerLTQA-shaped layout:
// [{"character", "sessions": [{"date", "dialogue": [{"speaker", "text"}]}],
//   "qa": [{"question", "answer", "category"?, "date"?}]}]
Dialogue parse_perltqa(const json& rec) {
  Dialogue d;
  d.dialogue_id = scalar_text(field(rec, "character"));
  for (const auto& s : field(rec, "sessions")) {
    const auto raw = scalar_text(field(s, "date"));
    d.sessions.push_back({require_date(parse_date_prefix(raw), raw), parse_turns(field(s, "dialogue"), "speaker", "text")});
  }
  if (d.sessions.empty()) throw RecordError("character has no sessions");
  for (const auto& q : field(rec, "qa")) {
    Question out;
    out.question = scalar_text(field(q, "question"));
    out.gold_answer = scalar_text(field(q, "answer"));
    if (auto c = q.find("category"); c != q.end()) out.category = scalar_text(*c);
    if (auto dt = q.find("date"); dt != q.end()) {
      const auto raw = scalar_text(*dt);
      out.question_date = require_date(parse_date_prefix(raw), raw);
    } else {
      out.question_date = d.sessions.back().timestamp;
    }
    d.questions.push_back(std::move(out));
  }
  return d;
}

constexpr std::array<std::string_view, 12> kMonths{"january", "february", "march",     "april",
                                                   "may",     "june",     "july",      "august",
                                                   "september", "october", "november", "december"};

}  // namespace

std::optional<Date> parse_longmemeval_date(std::string_view s) {
  static const std::regex re(R"(^\s*(\d{4})/(\d{2})/(\d{2}).*$)");
  std::cmatch m;
  if (!std::regex_match(s.begin(), s.end(), m, re)) return std::nullopt;
  Date d{std::stoi(m[1].str()), static_cast<unsigned>(std::stoi(m[2].str())),
         static_cast<unsigned>(std::stoi(m[3].str()))};
  return d.valid() ? std::optional(d) : std::nullopt;
}

std::optional<Date> parse_locomo_date(std::string_view s) {
  static const std::regex re(R"(^.*\bon\s+(\d{1,2})\s+([A-Za-z]+),?\s+(\d{4})\s*$)");
  std::cmatch m;
  if (!std::regex_match(s.begin(), s.end(), m, re)) return std::nullopt;
  std::string month = m[2].str();
  std::transform(month.begin(), month.end(), month.begin(), [](unsigned char c) { return std::tolower(c); });
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    // Full names or three-letter abbreviations.
    if (month == kMonths[i] || (month.size() == 3 && kMonths[i].substr(0, 3) == month)) {
      Date d{std::stoi(m[3].str()), static_cast<unsigned>(i + 1),
             static_cast<unsigned>(std::stoi(m[1].str()))};
      return d.valid() ? std::optional(d) : std::nullopt;
    }
  }
  return std::nullopt;
}

IngestResult ingest_json(const json& doc, DatasetFormat format) {
  if (!doc.is_array()) throw EmptyDataset(std::string(to_string(format)) + " dataset must be a JSON array");
  IngestResult out;
  std::size_t index = 0;
  for (const auto& rec : doc) {
    const std::size_t at = index++;
    Dialogue d;
    try {
      switch (format) {
        case DatasetFormat::generic: d = parse_generic(rec); break;
        case DatasetFormat::longmemeval: d = parse_longmemeval(rec); break;
        case DatasetFormat::locomo: d = parse_locomo(rec); break;
        case DatasetFormat::perltqa: d = parse_perltqa(rec); break;
      }
      for (std::size_t i = 1; i < d.sessions.size(); ++i) {
        if (d.sessions[i].timestamp < d.sessions[i - 1].timestamp) {
          throw RecordError("session " + std::to_string(i + 1) + " (" + d.sessions[i].timestamp.to_string() +
                            ") is dated before session " + std::to_string(i) + " (" +
                            d.sessions[i - 1].timestamp.to_string() + ")");
        }
      }
      if (d.sessions.empty()) throw RecordError("no sessions");
    } catch (const std::exception& e) {
      // RecordError and nlohmann type errors alike make the record unusable.
      ++out.skipped_records;
      out.warnings.push_back("record " + std::to_string(at) + ": " + e.what());
      spdlog::warn("skipping record {}: {}", at, e.what());
      continue;
    }
    const Date last = d.sessions.back().timestamp;
    std::erase_if(d.questions, [&](const Question& q) {
      if (q.question_date >= last) return false;
      ++out.dropped_questions;
      out.warnings.push_back(d.dialogue_id + ": question dated " + q.question_date.to_string() +
                             " precedes the last session, dropped");
      return true;
    });
    out.dialogues.push_back(std::move(d));
  }
  if (out.dialogues.empty()) {
    throw EmptyDataset("no usable dialogues (" + std::to_string(out.skipped_records) + " skipped)");
  }
  return out;
}

IngestResult ingest(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw EmptyDataset(path.string() + " is not valid JSON");
  return ingest_json(doc, format);
}

nlohmann::ordered_json to_generic_json(const std::vector<Dialogue>& dialogues) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& d : dialogues) {
    nlohmann::ordered_json rec;
    rec["dialogue_id"] = d.dialogue_id;
    rec["sessions"] = nlohmann::ordered_json::array();
    for (const auto& s : d.sessions) {
      nlohmann::ordered_json js;
      js["timestamp"] = s.timestamp.to_string();
      js["turns"] = nlohmann::ordered_json::array();
      for (const auto& t : s.turns) js["turns"].push_back({{"speaker", t.speaker}, {"text", t.text}});
      rec["sessions"].push_back(std::move(js));
    }
    rec["questions"] = nlohmann::ordered_json::array();
    for (const auto& q : d.questions) {
      nlohmann::ordered_json jq;
      jq["question"] = q.question;
      jq["gold_answer"] = q.gold_answer;
      jq["question_date"] = q.question_date.to_string();
      jq["category"] = q.category;
      rec["questions"].push_back(std::move(jq));
    }
    arr.push_back(std::move(rec));
  }
  return arr;
}

void write_generic(const std::vector<Dialogue>& dialogues, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_generic_json(dialogues).dump(2) << '\n';
}

}  // namespace memcraft
