#include <gtest/gtest.h>

#include "memcraft/types.hpp"

using namespace memcraft;

TEST(Date, ParsesStrictIsoDates) {
  auto d = Date::parse("2024-02-29");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->year, 2024);
  EXPECT_EQ(d->month, 2u);
  EXPECT_EQ(d->day, 29u);
  EXPECT_EQ(d->to_string(), "2024-02-29");
  EXPECT_FALSE(Date::parse("2023-02-29"));
  EXPECT_FALSE(Date::parse("2024-2-01"));
  EXPECT_FALSE(Date::parse("2024-13-01"));
  EXPECT_FALSE(Date::parse("yesterday"));
}

TEST(Date, Ordering) {
  EXPECT_LT(*Date::parse("2023-12-31"), *Date::parse("2024-01-01"));
  EXPECT_LT(*Date::parse("2024-01-09"), *Date::parse("2024-01-10"));
}

TEST(DateRange, RoundTripsSingleAndRange) {
  auto single = DateRange::parse("2024-03-15");
  ASSERT_TRUE(single);
  EXPECT_TRUE(single->is_single());
  EXPECT_EQ(single->to_string(), "2024-03-15");

  auto range = DateRange::parse("2024-01-05..2024-03-10");
  ASSERT_TRUE(range);
  EXPECT_FALSE(range->is_single());
  EXPECT_EQ(range->to_string(), "2024-01-05..2024-03-10");
  EXPECT_FALSE(DateRange::parse("2024-03-10..2024-01-05"));
}

TEST(Utf8, CountsCodePointsAndTruncatesOnBoundaries) {
  EXPECT_EQ(utf8_length(""), 0u);
  EXPECT_EQ(utf8_length("abc"), 3u);
  EXPECT_EQ(utf8_length("caf\xC3\xA9"), 4u);
  EXPECT_EQ(utf8_length("\xE6\x97\xA5\xE6\x9C\xAC"), 2u);
  EXPECT_EQ(utf8_truncate("caf\xC3\xA9!", 4), "caf\xC3\xA9");
  EXPECT_EQ(utf8_truncate("\xE6\x97\xA5\xE6\x9C\xAC", 1), "\xE6\x97\xA5");
  EXPECT_EQ(utf8_truncate("abc", 10), "abc");
}

TEST(Labels, ShortNamesAndParsing) {
  EXPECT_EQ(short_name(Component::core), "core");
  EXPECT_EQ(short_name(MemType::episodic), "epi");
  EXPECT_EQ(short_name(MemType::semantic), "sem");
  EXPECT_EQ(short_name(MemType::procedural), "proc");
  EXPECT_EQ(parse_mem_type("semantic"), MemType::semantic);
  EXPECT_FALSE(parse_mem_type("core"));
  EXPECT_EQ(component_of(MemType::procedural), Component::procedural);
  EXPECT_FALSE(mem_type_of(Component::core));
}
