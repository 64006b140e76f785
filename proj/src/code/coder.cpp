#include "pfd/code/coder.hpp"

#include <algorithm>

#include "pfd/common/csv.hpp"
#include "pfd/common/log.hpp"
#include "pfd/common/parallel.hpp"
#include "pfd/common/text.hpp"
#include "pfd/screen/screener.hpp"

namespace pfd::code {

llm::SchemaSpec coding_schema(const CodingFrame& frame, bool include_evidence) {
  std::vector<llm::FieldSpec> fields;
  for (const auto& a : frame.addressees) {
    fields.push_back({a.id, llm::FieldKind::boolean, true, "Addressee: " + a.label});
  }
  for (const auto* s : frame.sub_themes()) {
    fields.push_back({s->id, llm::FieldKind::boolean, true, "Concern: " + s->label});
  }
  if (include_evidence) {
    fields.push_back({"evidence", llm::FieldKind::list_of_text, true,
                      "Items of the form '<sub_theme_id>: <passage copied verbatim>'"});
  }
  return llm::SchemaSpec("coding_" + frame.fingerprint(), std::move(fields));
}

std::string coding_system_prompt(const CodingFrame& frame, bool include_evidence) {
  std::string s =
      "You code coroners' Prevention of Future Deaths reports against a fixed coding frame.\n"
      "Answer every field with true or false. A field is true when the report supports it at least once.\n\n"
      "Addressee categories (who the report is sent to; a report may have several):\n";
  for (const auto& a : frame.addressees) s += "- " + a.id + ": " + a.label + ". " + a.definition + "\n";
  s += "\nConcerns raised by the coroner, grouped by theme:\n";
  for (const auto& t : frame.themes) {
    s += t.label + "\n";
    for (const auto& st : t.sub_themes) s += "- " + st.id + ": " + st.label + ". " + st.definition + "\n";
  }
  if (include_evidence) {
    s += "\nIn \"evidence\", give for each concern you mark true one or more passages copied exactly from the "
         "report, each written as '<sub_theme_id>: <passage>'.";
  }
  return s;
}

CodeOutcome code_report(const corpus::ReportRecord& report, const CodingFrame& frame, llm::Gateway& gateway,
                        bool include_evidence) {
  CodeOutcome out;
  out.codes.report_id = report.id;
  out.codes.frame_fingerprint = frame.fingerprint();
  const auto schema = coding_schema(frame, include_evidence);
  try {
    const auto result = gateway.complete_structured(coding_system_prompt(frame, include_evidence),
                                                    screen::screen_user_prompt(report), {}, schema);
    out.attempts = result.attempts;
    for (const auto& a : frame.addressees) out.codes.addressee_flags.push_back(result.parsed.at(a.id).get<bool>());
    const auto subs = frame.sub_themes();
    for (const auto* s : subs) out.codes.sub_theme_flags.push_back(result.parsed.at(s->id).get<bool>());
    out.coded = true;

    if (include_evidence) {
      const std::string source = corpus::section_text(report);
      for (const auto& item : result.parsed.at("evidence")) {
        const std::string text = item.get<std::string>();
        const auto colon = text.find(':');
        const std::string id = colon == std::string::npos ? "" : trim(text.substr(0, colon));
        const auto it = std::find_if(subs.begin(), subs.end(), [&](auto* s) { return s->id == id; });
        if (it == subs.end()) {
          out.warnings.push_back("dropped evidence with unknown sub-theme: \"" + text + "\"");
          continue;
        }
        const std::string span = trim(text.substr(colon + 1));
        if (screen::verify_spans({span}, source).empty()) {
          out.warnings.push_back("dropped unverifiable evidence for " + id + ": \"" + span + "\"");
          continue;
        }
        out.codes.evidence[id].push_back(span);
      }
    }
    if (std::none_of(out.codes.addressee_flags.begin(), out.codes.addressee_flags.end(), [](bool b) { return b; })) {
      out.warnings.push_back("no addressee category flagged; every report has a recipient");
    }
    if (std::none_of(out.codes.sub_theme_flags.begin(), out.codes.sub_theme_flags.end(), [](bool b) { return b; })) {
      out.warnings.push_back("no concern sub-theme flagged");
    }
  } catch (const llm::SchemaViolationError& e) {
    out.attempts = e.attempts();
    out.error = e.what();
  } catch (const llm::TransportError& e) {
    out.error = e.what();
  }
  if (!out.coded) {
    out.codes.addressee_flags.clear();
    out.codes.sub_theme_flags.clear();
    logger()->warn("report {} uncoded: {}", report.id, out.error);
  }
  for (const auto& w : out.warnings) logger()->warn("report {}: {}", report.id, w);
  return out;
}

std::vector<CodeOutcome> code_reports(const std::vector<const corpus::ReportRecord*>& reports,
                                      const CodingFrame& frame, llm::Gateway& gateway, bool include_evidence,
                                      int workers) {
  std::vector<const corpus::ReportRecord*> sorted = reports;
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::vector<CodeOutcome> out(sorted.size());
  parallel_for(sorted.size(), static_cast<std::size_t>(std::max(1, workers)),
               [&](std::size_t i) { out[i] = code_report(*sorted[i], frame, gateway, include_evidence); });
  return out;
}

TabulationResult& TabulationResult::operator+=(const TabulationResult& o) {
  if (frame_fingerprint != o.frame_fingerprint || addressee_counts.size() != o.addressee_counts.size() ||
      sub_theme_counts.size() != o.sub_theme_counts.size()) {
    throw FrameError("cannot add tabulations made under different frames");
  }
  for (std::size_t i = 0; i < addressee_counts.size(); ++i) addressee_counts[i] += o.addressee_counts[i];
  for (std::size_t i = 0; i < sub_theme_counts.size(); ++i) sub_theme_counts[i] += o.sub_theme_counts[i];
  n_reports += o.n_reports;
  n_uncoded += o.n_uncoded;
  return *this;
}

TabulationResult operator+(TabulationResult a, const TabulationResult& b) {
  a += b;
  return a;
}

TabulationResult tabulate(const std::vector<CodeVector>& codes, const CodingFrame& frame, std::size_t n_uncoded) {
  TabulationResult t;
  t.frame_fingerprint = frame.fingerprint();
  t.addressee_counts.assign(frame.addressees.size(), 0);
  t.sub_theme_counts.assign(frame.sub_theme_count(), 0);
  t.n_uncoded = n_uncoded;
  for (const auto& c : codes) {
    if (c.frame_fingerprint != t.frame_fingerprint || c.addressee_flags.size() != t.addressee_counts.size() ||
        c.sub_theme_flags.size() != t.sub_theme_counts.size()) {
      throw FrameError("report " + c.report_id + " was coded under a different frame");
    }
    for (std::size_t i = 0; i < c.addressee_flags.size(); ++i) t.addressee_counts[i] += c.addressee_flags[i] ? 1 : 0;
    for (std::size_t i = 0; i < c.sub_theme_flags.size(); ++i) t.sub_theme_counts[i] += c.sub_theme_flags[i] ? 1 : 0;
    ++t.n_reports;
  }
  return t;
}

namespace {

std::vector<std::string> flag_columns(const CodingFrame& frame) {
  std::vector<std::string> cols;
  for (const auto& a : frame.addressees) cols.push_back(a.id);
  for (const auto* s : frame.sub_themes()) cols.push_back(s->id);
  return cols;
}

}  // namespace

std::string format_codes_csv(const std::vector<CodeOutcome>& outcomes, const CodingFrame& frame) {
  const auto cols = flag_columns(frame);
  csv::Row header{"report_id", "status"};
  header.insert(header.end(), cols.begin(), cols.end());
  header.push_back("evidence");
  std::vector<csv::Row> rows{header};
  for (const auto& o : outcomes) {
    csv::Row row{o.codes.report_id, o.coded ? "coded" : "uncoded"};
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (!o.coded) {
        row.emplace_back();
        continue;
      }
      const bool flag = i < o.codes.addressee_flags.size()
                            ? o.codes.addressee_flags[i]
                            : o.codes.sub_theme_flags.at(i - o.codes.addressee_flags.size());
      row.emplace_back(flag ? "1" : "0");
    }
    std::vector<std::string> items;
    for (const auto& [id, spans] : o.codes.evidence) {
      for (const auto& s : spans) items.push_back(id + ": " + s);
    }
    row.push_back(screen::join_spans(items));
    rows.push_back(std::move(row));
  }
  return csv::format(rows);
}

std::vector<CodeOutcome> parse_codes_csv(const std::string& text, const CodingFrame& frame) {
  csv::Table table(csv::parse(text));
  const auto cols = flag_columns(frame);
  for (const auto& c : cols) {
    if (!table.has_column(c)) throw FrameError("codes file has no column for frame id '" + c + "'");
  }
  const std::size_t n_addr = frame.addressees.size();
  std::vector<CodeOutcome> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    CodeOutcome o;
    o.codes.report_id = table.at(i, "report_id");
    o.codes.frame_fingerprint = frame.fingerprint();
    const std::string& status = table.at(i, "status");
    if (status != "coded" && status != "uncoded") {
      throw ParseError("codes CSV row " + std::to_string(i + 2) + ": bad status '" + status + "'");
    }
    o.coded = status == "coded";
    if (o.coded) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const std::string& v = table.at(i, cols[c]);
        if (v != "0" && v != "1") {
          throw ParseError("codes CSV row " + std::to_string(i + 2) + ": column " + cols[c] + " is '" + v + "'");
        }
        (c < n_addr ? o.codes.addressee_flags : o.codes.sub_theme_flags).push_back(v == "1");
      }
    }
    if (table.has_column("evidence")) {
      for (const auto& item : screen::split_spans(table.at(i, "evidence"))) {
        const auto colon = item.find(": ");
        if (colon == std::string::npos) continue;
        o.codes.evidence[item.substr(0, colon)].push_back(item.substr(colon + 2));
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::string render_tables_markdown(const TabulationResult& t, const CodingFrame& frame) {
  if (t.frame_fingerprint != frame.fingerprint()) throw FrameError("tabulation does not belong to this frame");
  const std::string n = std::to_string(t.n_reports);
  std::string md;
  md += "Table A. Addressee categories (n = " + n + " reports)\n\n";
  md += "| Category | Count of reports |\n|---|---:|\n";
  for (std::size_t i = 0; i < frame.addressees.size(); ++i) {
    md += "| " + frame.addressees[i].label + " | " + std::to_string(t.addressee_counts[i]) + " |\n";
  }
  md += "\nTable B. Coroner-concern sub-themes (n = " + n + " reports)\n\n";
  md += "| Theme / sub-theme | Count of reports |\n|---|---:|\n";
  std::size_t k = 0;
  for (const auto& theme : frame.themes) {
    md += "| **" + theme.label + "** | |\n";
    for (const auto& s : theme.sub_themes) {
      md += "| " + s.label + " | " + std::to_string(t.sub_theme_counts[k++]) + " |\n";
    }
  }
  md += "\nCounts are report-level: a report adds at most 1 to any row, and may appear in several rows.\n";
  md += "Uncoded reports (coding failed after retries, excluded from n): " + std::to_string(t.n_uncoded) + "\n";
  return md;
}

std::string render_tables_csv(const TabulationResult& t, const CodingFrame& frame) {
  if (t.frame_fingerprint != frame.fingerprint()) throw FrameError("tabulation does not belong to this frame");
  std::vector<csv::Row> rows{{"table", "theme", "id", "label", "count"}};
  for (std::size_t i = 0; i < frame.addressees.size(); ++i) {
    rows.push_back({"addressees", "", frame.addressees[i].id, frame.addressees[i].label,
                    std::to_string(t.addressee_counts[i])});
  }
  std::size_t k = 0;
  for (const auto& theme : frame.themes) {
    for (const auto& s : theme.sub_themes) {
      rows.push_back({"sub_themes", theme.label, s.id, s.label, std::to_string(t.sub_theme_counts[k++])});
    }
  }
  rows.push_back({"summary", "", "n_reports", "Coded reports", std::to_string(t.n_reports)});
  rows.push_back({"summary", "", "n_uncoded", "Uncoded reports", std::to_string(t.n_uncoded)});
  return csv::format(rows);
}

}  // namespace pfd::code
