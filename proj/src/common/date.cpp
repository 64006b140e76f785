#include "pfd/common/date.hpp"

#include <fmt/format.h>

#include <array>
#include <cctype>
#include <charconv>
#include <vector>

#include "pfd/common/text.hpp"

namespace pfd {

Date Date::from_ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

std::string Date::iso() const {
  return fmt::format("{:04d}-{:02d}-{:02d}", year(), month(), day());
}

namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

std::optional<unsigned> month_from_name(std::string_view word) {
  const std::string w = to_lower(word);
  if (w.size() < 3) return std::nullopt;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i].starts_with(w) || w == kMonths[i]) return static_cast<unsigned>(i + 1);
  }
  return std::nullopt;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Strips ordinal suffixes such as "12th".
std::string_view strip_ordinal(std::string_view s) {
  if (s.size() > 2) {
    const std::string tail = to_lower(s.substr(s.size() - 2));
    if (tail == "st" || tail == "nd" || tail == "rd" || tail == "th") {
      return s.substr(0, s.size() - 2);
    }
  }
  return s;
}

std::optional<Date> make(int y, int m, int d) {
  if (y < 1900 || y > 2200 || m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  Date out = Date::from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
  if (!out.ymd.ok()) return std::nullopt;
  return out;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;

  if (t.size() == 10 && t[4] == '-' && t[7] == '-') {
    auto y = to_int(std::string_view(t).substr(0, 4));
    auto m = to_int(std::string_view(t).substr(5, 2));
    auto d = to_int(std::string_view(t).substr(8, 2));
    if (y && m && d) return make(*y, *m, *d);
    return std::nullopt;
  }

  if (t.find('/') != std::string::npos) {
    auto parts = split(t, '/');
    if (parts.size() != 3) return std::nullopt;
    auto d = to_int(trim(parts[0]));
    auto m = to_int(trim(parts[1]));
    auto y = to_int(trim(parts[2]));
    if (!(y && m && d)) return std::nullopt;
    return make(*y, *m, *d);
  }

  std::vector<std::string> words;
  for (auto& w : split_whitespace(t)) {
    std::string cleaned;
    for (char c : w) {
      if (c != ',' && c != '.') cleaned.push_back(c);
    }
    if (!cleaned.empty()) words.push_back(cleaned);
  }
  if (words.size() != 3) return std::nullopt;
  // "12 March 2021"
  if (auto m = month_from_name(words[1])) {
    auto d = to_int(strip_ordinal(words[0]));
    auto y = to_int(words[2]);
    if (d && y) return make(*y, static_cast<int>(*m), *d);
  }
  // "March 12 2021"
  if (auto m = month_from_name(words[0])) {
    auto d = to_int(strip_ordinal(words[1]));
    auto y = to_int(words[2]);
    if (d && y) return make(*y, static_cast<int>(*m), *d);
  }
  return std::nullopt;
}

}  // namespace pfd
