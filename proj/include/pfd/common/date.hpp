#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace pfd {

// Calendar date without time zone. Thin wrapper so the rest of the code does
// not have to spell std::chrono types.
struct Date {
  std::chrono::year_month_day ymd{};

  static Date from_ymd(int y, unsigned m, unsigned d);

  int year() const { return static_cast<int>(ymd.year()); }
  unsigned month() const { return static_cast<unsigned>(ymd.month()); }
  unsigned day() const { return static_cast<unsigned>(ymd.day()); }

  std::string iso() const;  // YYYY-MM-DD

  auto operator<=>(const Date&) const = default;
  bool operator==(const Date&) const = default;
};

// Accepts the date spellings found on report pages and in transcripts:
// "2021-03-12", "12/03/2021" (day first), "12 March 2021", "12th March 2021",
// "March 12, 2021". Returns nullopt for anything else or an invalid date.
std::optional<Date> parse_date(std::string_view text);

struct DateRange {
  Date from;
  Date to;

  bool contains(const Date& d) const { return from <= d && d <= to; }
};

}  // namespace pfd
