#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pfd/corpus/report.hpp"

namespace pfd::corpus {

struct HtmlLink {
  std::string href;  // as written in the markup
  std::string text;
  std::string rel;
  std::string css_class;
  std::size_t order = 0;  // position among all recorded elements
};

struct HtmlTime {
  std::string datetime;
  std::string text;
  std::size_t order = 0;
};

// Flattened view of a page: text blocks in reading order, anchors, <time>
// elements and table rows. Script, style and comments are dropped.
struct HtmlDocument {
  std::string title;
  std::vector<std::string> blocks;
  std::vector<HtmlLink> links;
  std::vector<HtmlTime> times;
  std::vector<std::vector<std::string>> table_rows;
  bool saw_markup = false;  // at least one tag was present
};

// Tolerant parser; never throws.
HtmlDocument parse_html(std::string_view html);

std::string decode_entities(std::string_view text);

// Extracts report metadata and, when the body carries the standard headings,
// section text. Fields not present in the markup stay unset. Never throws;
// markup that yields nothing produces an empty record with a warning.
PartialRecord html_fallback(std::string_view html_body);

// Splits free text into the four long-text sections by their headings.
// Unrecognised text before the first heading is ignored.
PartialRecord split_sections(const std::vector<std::string>& blocks);

}  // namespace pfd::corpus
