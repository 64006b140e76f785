#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfd/code/frame.hpp"
#include "pfd/corpus/report.hpp"
#include "pfd/llm/gateway.hpp"

namespace pfd::code {

struct CodeVector {
  std::string report_id;
  std::string frame_fingerprint;
  std::vector<bool> addressee_flags;  // frame.addressees order
  std::vector<bool> sub_theme_flags;  // frame.sub_themes() order
  std::map<std::string, std::vector<std::string>> evidence;  // sub-theme id -> spans

  bool operator==(const CodeVector&) const = default;
};

struct CodeOutcome {
  CodeVector codes;
  bool coded = false;  // false: coding failed, flags are meaningless
  int attempts = 0;
  std::string error;
  std::vector<std::string> warnings;  // validity warnings, dropped evidence
};

// One boolean field per addressee category and per sub-theme, named by id,
// plus an optional evidence list of "<sub_theme_id>: <verbatim passage>".
llm::SchemaSpec coding_schema(const CodingFrame& frame, bool include_evidence);
std::string coding_system_prompt(const CodingFrame& frame, bool include_evidence);

// One structured completion per report. Schema violations after retries
// leave the report uncoded. Reports with no addressee flag or no sub-theme
// flag are coded but carry a warning.
CodeOutcome code_report(const corpus::ReportRecord& report, const CodingFrame& frame, llm::Gateway& gateway,
                        bool include_evidence = false);

std::vector<CodeOutcome> code_reports(const std::vector<const corpus::ReportRecord*>& reports,
                                      const CodingFrame& frame, llm::Gateway& gateway, bool include_evidence,
                                      int workers);

struct TabulationResult {
  std::string frame_fingerprint;
  std::vector<std::size_t> addressee_counts;
  std::vector<std::size_t> sub_theme_counts;  // flattened frame order
  std::size_t n_reports = 0;                  // coded reports
  std::size_t n_uncoded = 0;

  TabulationResult& operator+=(const TabulationResult& o);
  bool operator==(const TabulationResult&) const = default;
};

TabulationResult operator+(TabulationResult a, const TabulationResult& b);

// Report-level counts: each report adds 0 or 1 to every row. Throws
// FrameError when a vector was coded under a different frame.
TabulationResult tabulate(const std::vector<CodeVector>& codes, const CodingFrame& frame, std::size_t n_uncoded = 0);

// Codes CSV: report_id, status (coded/uncoded), one 0/1 column per
// addressee id then per sub-theme id, evidence ("id: span" items joined
// like screener evidence).
std::string format_codes_csv(const std::vector<CodeOutcome>& outcomes, const CodingFrame& frame);
// Throws FrameError when the header does not match the frame.
std::vector<CodeOutcome> parse_codes_csv(const std::string& text, const CodingFrame& frame);

// Two tables in the published layout: addressee categories, then themes
// with their sub-themes, followed by a footnote on uncoded reports.
std::string render_tables_markdown(const TabulationResult& t, const CodingFrame& frame);
// Long form: table, theme, id, label, count.
std::string render_tables_csv(const TabulationResult& t, const CodingFrame& frame);

}  // namespace pfd::code
