#include "pfd/corpus/html.hpp"

#include <array>
#include <cctype>
#include <optional>

#include "pfd/common/text.hpp"

namespace pfd::corpus {

namespace {

constexpr std::array<std::string_view, 24> kBlockTags = {
    "p",  "div", "li", "ul", "ol", "tr", "table", "h1",      "h2",     "h3",   "h4",      "h5",
    "h6", "br",  "td", "th", "section", "article", "header", "footer", "main", "blockquote", "dd", "dt"};

bool is_block(std::string_view tag) {
  for (auto t : kBlockTags) {
    if (t == tag) return true;
  }
  return false;
}

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct Tag {
  std::string name;  // lower-case, without '/'
  bool closing = false;
  std::vector<std::pair<std::string, std::string>> attrs;

  std::string attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return v;
    }
    return {};
  }
};

Tag parse_tag(std::string_view inner) {
  Tag tag;
  std::size_t i = 0;
  if (i < inner.size() && inner[i] == '/') {
    tag.closing = true;
    ++i;
  }
  while (i < inner.size() && !std::isspace(static_cast<unsigned char>(inner[i])) && inner[i] != '/') {
    tag.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(inner[i]))));
    ++i;
  }
  while (i < inner.size()) {
    while (i < inner.size() && (std::isspace(static_cast<unsigned char>(inner[i])) || inner[i] == '/')) ++i;
    std::string key;
    while (i < inner.size() && inner[i] != '=' && !std::isspace(static_cast<unsigned char>(inner[i])) &&
           inner[i] != '/') {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(inner[i]))));
      ++i;
    }
    while (i < inner.size() && std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
    std::string value;
    if (i < inner.size() && inner[i] == '=') {
      ++i;
      while (i < inner.size() && std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
      if (i < inner.size() && (inner[i] == '"' || inner[i] == '\'')) {
        const char q = inner[i++];
        const auto end = inner.find(q, i);
        value = std::string(inner.substr(i, end == std::string_view::npos ? std::string_view::npos : end - i));
        i = end == std::string_view::npos ? inner.size() : end + 1;
      } else {
        while (i < inner.size() && !std::isspace(static_cast<unsigned char>(inner[i]))) value.push_back(inner[i++]);
      }
    }
    if (!key.empty()) tag.attrs.emplace_back(std::move(key), decode_entities(value));
  }
  return tag;
}

}  // namespace

std::string decode_entities(std::string_view text) {
  static const std::pair<std::string_view, unsigned> kNamed[] = {
      {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},     {"apos", '\''},
      {"nbsp", 0xA0},    {"rsquo", 0x2019}, {"lsquo", 0x2018}, {"rdquo", 0x201D}, {"ldquo", 0x201C},
      {"ndash", 0x2013}, {"mdash", 0x2014}, {"hellip", 0x2026}, {"pound", 0xA3},  {"copy", 0xA9}};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto semi = text.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    const std::string_view ent = text.substr(i + 1, semi - i - 1);
    std::optional<unsigned> cp;
    if (!ent.empty() && ent[0] == '#') {
      try {
        cp = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                 ? static_cast<unsigned>(std::stoul(std::string(ent.substr(2)), nullptr, 16))
                 : static_cast<unsigned>(std::stoul(std::string(ent.substr(1))));
      } catch (...) {
      }
    } else {
      for (const auto& [name, value] : kNamed) {
        if (name == ent) cp = value;
      }
    }
    if (!cp || *cp == 0 || *cp > 0x10FFFF) {
      out.push_back('&');
      continue;
    }
    append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

HtmlDocument parse_html(std::string_view html) {
  HtmlDocument doc;
  std::string text;
  std::size_t order = 0;

  std::optional<HtmlLink> open_link;
  std::optional<HtmlTime> open_time;
  std::vector<std::string> row;
  std::optional<std::string> cell;
  bool in_title = false;

  auto flush_block = [&] {
    std::string b = collapse_whitespace(decode_entities(text));
    if (!b.empty()) doc.blocks.push_back(std::move(b));
    text.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      const auto next = html.find('<', i);
      const auto chunk = html.substr(i, next == std::string_view::npos ? std::string_view::npos : next - i);
      if (in_title) {
        doc.title += chunk;
      } else {
        text += chunk;
        if (open_link) open_link->text += chunk;
        if (open_time) open_time->text += chunk;
        if (cell) *cell += chunk;
      }
      i = next == std::string_view::npos ? html.size() : next;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    const auto close = html.find('>', i + 1);
    if (close == std::string_view::npos) {
      text += html.substr(i);
      break;
    }
    const std::string_view inner = html.substr(i + 1, close - i - 1);
    i = close + 1;
    if (inner.empty() || inner[0] == '!' || inner[0] == '?') continue;
    Tag tag = parse_tag(inner);
    if (tag.name.empty()) continue;
    doc.saw_markup = true;

    if (!tag.closing && (tag.name == "script" || tag.name == "style")) {
      const std::string end_tag = "</" + tag.name;
      std::size_t end = i;
      while (true) {
        end = html.find('<', end);
        if (end == std::string_view::npos) break;
        if (to_lower(html.substr(end, end_tag.size())) == end_tag) break;
        ++end;
      }
      if (end == std::string_view::npos) {
        i = html.size();
      } else {
        const auto gt = html.find('>', end);
        i = gt == std::string_view::npos ? html.size() : gt + 1;
      }
      continue;
    }

    if (tag.name == "title") {
      in_title = !tag.closing;
      continue;
    }
    if (tag.name == "a") {
      if (!tag.closing) {
        open_link = HtmlLink{tag.attr("href"), "", tag.attr("rel"), tag.attr("class"), order++};
      } else if (open_link) {
        open_link->text = collapse_whitespace(decode_entities(open_link->text));
        if (!open_link->href.empty()) doc.links.push_back(std::move(*open_link));
        open_link.reset();
      }
      continue;
    }
    if (tag.name == "time") {
      if (!tag.closing) {
        open_time = HtmlTime{tag.attr("datetime"), "", order++};
      } else if (open_time) {
        open_time->text = collapse_whitespace(decode_entities(open_time->text));
        doc.times.push_back(std::move(*open_time));
        open_time.reset();
      }
      continue;
    }
    if (tag.name == "td" || tag.name == "th") {
      if (cell) row.push_back(collapse_whitespace(decode_entities(*cell)));
      cell.reset();
      if (!tag.closing) cell = std::string{};
    }
    if (tag.name == "tr") {
      if (cell) row.push_back(collapse_whitespace(decode_entities(*cell)));
      cell.reset();
      if (!row.empty()) doc.table_rows.push_back(std::move(row));
      row.clear();
    }
    if (is_block(tag.name)) {
      // Table cells on the same row stay in one block, separated by a tab.
      if ((tag.name == "td" || tag.name == "th") && !tag.closing && !text.empty()) {
        text += " \t ";
        continue;
      }
      if (tag.name != "td" && tag.name != "th") flush_block();
    }
  }
  if (cell) row.push_back(collapse_whitespace(decode_entities(*cell)));
  if (!row.empty()) doc.table_rows.push_back(std::move(row));
  flush_block();
  doc.title = collapse_whitespace(decode_entities(doc.title));
  return doc;
}

namespace {

enum class Section { none, investigation, circumstances, concerns, action, other };

// Matches the numbered headings of the standard report template.
Section classify_heading(const std::string& block) {
  if (block.size() > 90) return Section::none;
  std::string b = to_lower(block);
  // Drop a leading section number such as "4 " or "4.".
  std::size_t k = 0;
  while (k < b.size() && (std::isdigit(static_cast<unsigned char>(b[k])) || b[k] == '.' || b[k] == ' ')) ++k;
  b = b.substr(k);
  if (b.starts_with("investigation and inquest") || b.starts_with("inquest")) return Section::investigation;
  if (b.starts_with("circumstances of the death") || b.starts_with("circumstances of death"))
    return Section::circumstances;
  if (b.starts_with("coroner's concerns") || b.starts_with("coroner\xE2\x80\x99s concerns") ||
      b.starts_with("coroners concerns") || b.starts_with("matters of concern"))
    return Section::concerns;
  if (b.starts_with("action should be taken")) return Section::action;
  if (b.starts_with("your response") || b.starts_with("copies and publication") ||
      b.starts_with("coroner's legal powers") || b.starts_with("coroner\xE2\x80\x99s legal powers") ||
      b.starts_with("this report is being sent to") || b.starts_with("signed"))
    return Section::other;
  return Section::none;
}

std::optional<std::string> value_after(const std::string& block, std::string_view key) {
  const std::string lb = to_lower(block);
  if (!lb.starts_with(key)) return std::nullopt;
  std::size_t p = key.size();
  while (p < block.size() && (block[p] == ':' || block[p] == ' ' || block[p] == '\t')) ++p;
  if (p == key.size()) return std::nullopt;  // key must be followed by a separator
  return trim(block.substr(p));
}

std::vector<std::string> split_recipients(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  auto push = [&] {
    auto t = trim(cur);
    while (!t.empty() && (t.back() == ',' || t.back() == '.')) t.pop_back();
    if (!t.empty()) out.push_back(t);
    cur.clear();
  };
  for (char c : raw) {
    if (c == '|' || c == ';' || c == '\n' || c == '\t') {
      push();
    } else {
      cur.push_back(c);
    }
  }
  push();
  return out;
}

void apply_metadata(PartialRecord& rec, const std::string& key_lower, const std::string& value) {
  if (value.empty()) return;
  if (key_lower.starts_with("date of report") || key_lower == "date") {
    if (!rec.published_date) {
      if (auto d = parse_date(value)) {
        rec.published_date = d;
      } else {
        rec.warnings.push_back("unparseable report date '" + value + "'");
      }
    }
  } else if (key_lower.starts_with("coroner name") || key_lower.starts_with("coroner's name") ||
             key_lower.starts_with("coroners name")) {
    if (!rec.coroner_name) rec.coroner_name = value;
  } else if (key_lower.starts_with("coroner area") || key_lower.starts_with("coroner's area")) {
    if (!rec.coroner_area) rec.coroner_area = value;
  } else if (key_lower.starts_with("this report is being sent to") || key_lower.starts_with("sent to")) {
    if (!rec.recipients) rec.recipients = split_recipients(value);
  }
}

constexpr std::array<std::string_view, 9> kMetaKeys = {
    "date of report", "coroner name", "coroner's name", "coroners name", "coroner area",
    "coroner's area", "this report is being sent to", "sent to", "date"};

}  // namespace

PartialRecord split_sections(const std::vector<std::string>& blocks) {
  PartialRecord rec;
  Section current = Section::none;
  std::string buf[4];
  bool seen[4] = {false, false, false, false};
  for (const auto& block : blocks) {
    const Section h = classify_heading(block);
    if (h != Section::none) {
      current = h;
      if (h != Section::other) seen[static_cast<int>(h) - 1] = true;
      // Heading and body can share a block: "CORONER'S CONCERNS The MATTERS..."
      continue;
    }
    if (current == Section::none || current == Section::other) continue;
    auto& b = buf[static_cast<int>(current) - 1];
    if (!b.empty()) b += "\n";
    b += block;
  }
  if (seen[0]) rec.section_investigation = buf[0];
  if (seen[1]) rec.section_circumstances = buf[1];
  if (seen[2]) rec.section_concerns = buf[2];
  if (seen[3]) rec.section_action = buf[3];
  return rec;
}

PartialRecord html_fallback(std::string_view html_body) {
  PartialRecord rec;
  if (trim(html_body).empty()) {
    rec.warnings.push_back("empty HTML body");
    return rec;
  }
  const HtmlDocument doc = parse_html(html_body);
  if (!doc.saw_markup) rec.warnings.push_back("no markup found; treating body as plain text");

  for (const auto& row : doc.table_rows) {
    if (row.size() < 2) continue;
    std::string key = to_lower(trim(row[0]));
    while (!key.empty() && key.back() == ':') key.pop_back();
    apply_metadata(rec, key, trim(row[1]));
  }
  for (const auto& block : doc.blocks) {
    for (auto key : kMetaKeys) {
      if (auto v = value_after(block, key)) {
        apply_metadata(rec, std::string(key), *v);
        break;
      }
    }
  }

  PartialRecord sections = split_sections(doc.blocks);
  rec.section_investigation = sections.section_investigation;
  rec.section_circumstances = sections.section_circumstances;
  rec.section_concerns = sections.section_concerns;
  rec.section_action = sections.section_action;

  if (rec.empty()) rec.warnings.push_back("no report metadata or sections found in HTML");
  return rec;
}

}  // namespace pfd::corpus
