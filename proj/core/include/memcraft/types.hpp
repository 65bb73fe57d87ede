#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace memcraft {

// The three retrievable entry sections.
enum class MemType : std::uint8_t { episodic = 0, semantic = 1, procedural = 2 };

// All four memory components; Core is never retrieved, only prepended.
enum class Component : std::uint8_t { core = 0, episodic = 1, semantic = 2, procedural = 3 };

inline constexpr std::array<MemType, 3> kEntryTypes{MemType::episodic, MemType::semantic,
                                                    MemType::procedural};
inline constexpr std::array<Component, 4> kComponents{Component::core, Component::episodic,
                                                      Component::semantic, Component::procedural};

template <class T>
using PerComponent = std::array<T, 4>;
template <class T>
using PerEntryType = std::array<T, 3>;

constexpr std::size_t index_of(MemType t) { return static_cast<std::size_t>(t); }
constexpr std::size_t index_of(Component c) { return static_cast<std::size_t>(c); }

constexpr Component component_of(MemType t) {
  return static_cast<Component>(static_cast<std::uint8_t>(t) + 1);
}
constexpr std::optional<MemType> mem_type_of(Component c) {
  if (c == Component::core) return std::nullopt;
  return static_cast<MemType>(static_cast<std::uint8_t>(c) - 1);
}

// "episodic" / "semantic" / "procedural"
std::string_view to_string(MemType t);
std::optional<MemType> parse_mem_type(std::string_view s);

// Short keys used in reward records: "core" / "epi" / "sem" / "proc".
std::string_view short_name(Component c);
std::string_view short_name(MemType t);
std::string_view upper_label(MemType t);  // "EPISODIC" ...

// Calendar date, strict YYYY-MM-DD on the wire.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;

  std::string to_string() const;
  bool valid() const;
  static std::optional<Date> parse(std::string_view text);
};

// Closed date range; a single date has first == last.
struct DateRange {
  Date first;
  Date last;

  auto operator<=>(const DateRange&) const = default;

  static DateRange single(Date d) { return {d, d}; }
  bool is_single() const { return first == last; }
  // "YYYY-MM-DD" or "YYYY-MM-DD..YYYY-MM-DD"
  std::string to_string() const;
  static std::optional<DateRange> parse(std::string_view text);
};

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);
// Longest prefix holding at most max_chars code points.
std::string utf8_truncate(std::string_view text, std::size_t max_chars);

std::string trim(std::string_view s);

}  // namespace memcraft
