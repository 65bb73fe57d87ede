#include "memcraft/types.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace memcraft {

std::string_view to_string(MemType t) {
  switch (t) {
    case MemType::episodic: return "episodic";
    case MemType::semantic: return "semantic";
    case MemType::procedural: return "procedural";
  }
  return "?";
}

std::optional<MemType> parse_mem_type(std::string_view s) {
  if (s == "episodic" || s == "epi") return MemType::episodic;
  if (s == "semantic" || s == "sem") return MemType::semantic;
  if (s == "procedural" || s == "proc") return MemType::procedural;
  return std::nullopt;
}

std::string_view short_name(Component c) {
  switch (c) {
    case Component::core: return "core";
    case Component::episodic: return "epi";
    case Component::semantic: return "sem";
    case Component::procedural: return "proc";
  }
  return "?";
}

std::string_view short_name(MemType t) { return short_name(component_of(t)); }

std::string_view upper_label(MemType t) {
  switch (t) {
    case MemType::episodic: return "EPISODIC";
    case MemType::semantic: return "SEMANTIC";
    case MemType::procedural: return "PROCEDURAL";
  }
  return "?";
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

bool Date::valid() const {
  using namespace std::chrono;
  return year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}.ok();
}

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const char* first = text.data() + pos;
    const char* last = first + len;
    for (const char* p = first; p != last; ++p) {
      if (*p < '0' || *p > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
  };
  Date d;
  if (!num(0, 4, d.year) || !num(5, 2, d.month) || !num(8, 2, d.day)) return std::nullopt;
  if (!d.valid()) return std::nullopt;
  return d;
}

std::string DateRange::to_string() const {
  if (is_single()) return first.to_string();
  return first.to_string() + ".." + last.to_string();
}

std::optional<DateRange> DateRange::parse(std::string_view text) {
  if (auto sep = text.find(".."); sep != std::string_view::npos) {
    auto a = Date::parse(text.substr(0, sep));
    auto b = Date::parse(text.substr(sep + 2));
    if (!a || !b || *b < *a) return std::nullopt;
    return DateRange{*a, *b};
  }
  auto d = Date::parse(text);
  if (!d) return std::nullopt;
  return DateRange::single(*d);
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string utf8_truncate(std::string_view text, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if ((c & 0xC0) != 0x80) {
      if (chars == max_chars) return std::string(text.substr(0, i));
      ++chars;
    }
  }
  return std::string(text);
}

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace memcraft
