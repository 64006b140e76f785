#include "pfd/common/csv.hpp"

#include "pfd/common/error.hpp"

namespace pfd::csv {

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    const std::string& f = row[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
      continue;
    }
    out.push_back('"');
    for (char c : f) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
  }
  out.push_back('\n');
  return out;
}

std::string format(const std::vector<Row>& rows) {
  std::string out;
  for (const auto& r : rows) out += format_row(r);
  return out;
}

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t quote_line = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        quote_line = line;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        any = false;
        break;
      default:
        field.push_back(c);
        any = true;
    }
  }
  if (in_quotes) {
    throw ParseError("csv: unterminated quoted field starting on line " +
                     std::to_string(quote_line));
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

Table::Table(std::vector<Row> rows) {
  if (rows.empty()) throw ParseError("csv: missing header row");
  header_ = std::move(rows.front());
  body_.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  for (std::size_t i = 0; i < body_.size(); ++i) {
    if (body_[i].size() != header_.size()) {
      throw ParseError("csv: row " + std::to_string(i + 2) + " has " +
                       std::to_string(body_[i].size()) + " fields, header has " +
                       std::to_string(header_.size()));
    }
  }
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw ParseError("csv: missing column '" + std::string(name) + "'");
}

const std::string& Table::at(std::size_t r, std::string_view col) const {
  return body_.at(r).at(column(col));
}

}  // namespace pfd::csv
