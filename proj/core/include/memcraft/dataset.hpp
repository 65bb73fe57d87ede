#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "memcraft/types.hpp"

namespace memcraft {

struct Turn {
  std::string speaker;
  std::string text;
  bool operator==(const Turn&) const = default;
};

struct Session {
  Date timestamp;
  std::vector<Turn> turns;
  bool operator==(const Session&) const = default;

  // One "speaker: text" line per turn.
  std::string transcript() const;
};

struct Question {
  std::string question;
  std::string gold_answer;
  Date question_date;
  std::string category;
  bool operator==(const Question&) const = default;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Session> sessions;  // non-decreasing timestamps
  std::vector<Question> questions;
  bool operator==(const Dialogue&) const = default;
};

enum class DatasetFormat : std::uint8_t { generic, longmemeval, locomo, perltqa };

class UnknownFormat : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(DatasetFormat f);
DatasetFormat parse_dataset_format(std::string_view s);  // throws UnknownFormat

struct IngestResult {
  std::vector<Dialogue> dialogues;
  std::size_t skipped_records = 0;
  std::size_t dropped_questions = 0;
  std::vector<std::string> warnings;
};

// Reads a dataset file and normalizes it. Malformed records are skipped and
// counted; throws EmptyDataset when nothing usable remains.
IngestResult ingest(const std::filesystem::path& path, DatasetFormat format);
IngestResult ingest_json(const nlohmann::json& doc, DatasetFormat format);

// Canonical (generic) JSON representation:
// [{"dialogue_id", "sessions": [{"timestamp": "YYYY-MM-DD",
//   "turns": [{"speaker", "text"}]}],
//   "questions": [{"question", "gold_answer", "question_date", "category"}]}]
nlohmann::ordered_json to_generic_json(const std::vector<Dialogue>& dialogues);
void write_generic(const std::vector<Dialogue>& dialogues, const std::filesystem::path& path);

// "2023/05/20 (Sat) 02:21"
std::optional<Date> parse_longmemeval_date(std::string_view s);
// "1:56 pm on 8 May, 2023"
std::optional<Date> parse_locomo_date(std::string_view s);

}  // namespace memcraft
