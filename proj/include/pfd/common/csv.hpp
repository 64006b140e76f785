#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pfd::csv {

using Row = std::vector<std::string>;

// RFC 4180 quoting: fields containing comma, quote, CR or LF are quoted.
std::string format_row(const Row& row);
std::string format(const std::vector<Row>& rows);

// Parses a whole document. Throws ParseError on an unterminated quote,
// naming the line it started on.
std::vector<Row> parse(std::string_view text);

// Header-indexed view over parsed rows.
class Table {
 public:
  explicit Table(std::vector<Row> rows);

  const Row& header() const { return header_; }
  std::size_t size() const { return body_.size(); }
  const Row& row(std::size_t i) const { return body_.at(i); }
  // Throws ParseError when the column is absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  const std::string& at(std::size_t row, std::string_view col) const;

 private:
  Row header_;
  std::vector<Row> body_;
};

}  // namespace pfd::csv
