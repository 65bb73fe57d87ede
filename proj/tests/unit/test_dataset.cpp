#include <filesystem>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "memcraft/dataset.hpp"

using namespace memcraft;
namespace fs = std::filesystem;

namespace {

fs::path fixture(const std::string& name) { return fs::path(MEMCRAFT_FIXTURES_DIR) / name; }

}  // namespace

TEST(DatasetFormatTest, Names) {
  for (auto f : {DatasetFormat::generic, DatasetFormat::longmemeval, DatasetFormat::locomo, DatasetFormat::perltqa}) {
    EXPECT_EQ(parse_dataset_format(to_string(f)), f);
  }
  EXPECT_THROW(parse_dataset_format("msc"), UnknownFormat);
}

TEST(DateParsers, LongMemEvalAndLocomo) {
  EXPECT_EQ(parse_longmemeval_date("2023/05/20 (Sat) 02:21"), Date::parse("2023-05-20"));
  EXPECT_FALSE(parse_longmemeval_date("2023-05-20"));
  EXPECT_FALSE(parse_longmemeval_date("2023/02/30 (Thu) 00:00"));
  EXPECT_EQ(parse_locomo_date("1:56 pm on 8 May, 2023"), Date::parse("2023-05-08"));
  EXPECT_EQ(parse_locomo_date("9:02 am on 3 Jun, 2023"), Date::parse("2023-06-03"));
  EXPECT_EQ(parse_locomo_date("10:00 am on 25 December 2022"), Date::parse("2022-12-25"));
  EXPECT_FALSE(parse_locomo_date("sometime in spring"));
  EXPECT_FALSE(parse_locomo_date("1:00 pm on 31 Juneish, 2023"));
}

TEST(Ingest, GenericFixtureKeepsSessionOrder) {
  const auto r = ingest(fs::path(MEMCRAFT_FIXTURES_DIR) / "pipeline" / "dataset.json", DatasetFormat::generic);
  ASSERT_EQ(r.dialogues.size(), 3u);
  EXPECT_EQ(r.skipped_records, 0u);
  for (const auto& d : r.dialogues) {
    EXPECT_EQ(d.sessions.size(), 3u);
    for (std::size_t i = 1; i < d.sessions.size(); ++i) {
      EXPECT_LE(d.sessions[i - 1].timestamp, d.sessions[i].timestamp);
    }
  }
  EXPECT_EQ(r.dialogues[0].dialogue_id, "alice-01");
}

TEST(Ingest, OutOfOrderSessionsRejectRecord) {
  const auto r = ingest(fixture("datasets/longmemeval_small.json"), DatasetFormat::longmemeval);
  ASSERT_EQ(r.dialogues.size(), 1u);
  EXPECT_EQ(r.skipped_records, 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("dated before"), std::string::npos);
}

TEST(Ingest, LongMemEvalShape) {
  const auto r = ingest(fixture("datasets/longmemeval_small.json"), DatasetFormat::longmemeval);
  const auto& d = r.dialogues[0];
  EXPECT_EQ(d.dialogue_id, "lme-001");
  ASSERT_EQ(d.sessions.size(), 2u);
  EXPECT_EQ(d.sessions[0].turns[0], (Turn{"user", "I went to a concert tonight."}));
  EXPECT_EQ(d.sessions[1].timestamp, *Date::parse("2023-05-23"));
  ASSERT_EQ(d.questions.size(), 1u);
  EXPECT_EQ(d.questions[0].category, "temporal-reasoning");
  EXPECT_EQ(d.questions[0].question_date, *Date::parse("2023-05-30"));
}

TEST(Ingest, LocomoCategoriesVerbatim) {
  const auto r = ingest(fixture("datasets/locomo_small.json"), DatasetFormat::locomo);
  ASSERT_EQ(r.dialogues.size(), 1u);
  EXPECT_EQ(r.skipped_records, 1u);
  const auto& d = r.dialogues[0];
  ASSERT_EQ(d.sessions.size(), 3u);
  // Numeric session order, not lexicographic.
  EXPECT_EQ(d.sessions[0].timestamp, *Date::parse("2023-05-08"));
  EXPECT_EQ(d.sessions[1].timestamp, *Date::parse("2023-05-21"));
  EXPECT_EQ(d.sessions[2].timestamp, *Date::parse("2023-06-03"));
  ASSERT_EQ(d.questions.size(), 6u);
  std::vector<std::string> cats;
  for (const auto& q : d.questions) cats.push_back(q.category);
  EXPECT_EQ(cats, (std::vector<std::string>{"1", "2", "3", "4", "5", "4"}));
  EXPECT_EQ(d.questions[4].gold_answer, "Porto");
  EXPECT_EQ(d.questions[5].gold_answer, "3");
}

TEST(Ingest, PerLtqaDropsQuestionsBeforeLastSession) {
  const auto r = ingest(fixture("datasets/perltqa_small.json"), DatasetFormat::perltqa);
  const auto& d = r.dialogues[0];
  EXPECT_EQ(d.dialogue_id, "Lin Qiao");
  EXPECT_EQ(d.sessions[0].timestamp, *Date::parse("2022-03-01"));
  ASSERT_EQ(d.questions.size(), 2u);
  EXPECT_EQ(r.dropped_questions, 1u);
  EXPECT_EQ(d.questions[0].category, "profile");
  EXPECT_EQ(d.questions[0].question_date, *Date::parse("2022-04-12"));
  EXPECT_EQ(d.questions[1].question_date, *Date::parse("2022-05-01"));
}

TEST(Ingest, EmptyAndInvalid) {
  EXPECT_THROW(ingest_json(nlohmann::json::array(), DatasetFormat::generic), EmptyDataset);
  EXPECT_THROW(ingest_json(nlohmann::json::object(), DatasetFormat::generic), EmptyDataset);
  const auto only_bad = nlohmann::json::parse(R"([{"dialogue_id": "x", "sessions": []}, {"nope": 1}])");
  EXPECT_THROW(ingest_json(only_bad, DatasetFormat::generic), EmptyDataset);
}

TEST(GenericJson, RoundTrip) {
  const auto first = ingest(fixture("datasets/locomo_small.json"), DatasetFormat::locomo).dialogues;
  const auto file = fs::temp_directory_path() / "memcraft_generic_roundtrip.json";
  write_generic(first, file);
  const auto second = ingest(file, DatasetFormat::generic).dialogues;
  EXPECT_EQ(first, second);
  fs::remove(file);
}

TEST(SessionTest, Transcript) {
  Session s{*Date::parse("2024-01-01"), {{"user", "hi"}, {"assistant", "hello"}}};
  EXPECT_EQ(s.transcript(), "user: hi\nassistant: hello\n");
}
