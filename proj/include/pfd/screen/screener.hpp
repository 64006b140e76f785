#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pfd/corpus/report.hpp"
#include "pfd/llm/gateway.hpp"

namespace pfd::screen {

struct ScreenQuestion {
  std::string id;
  std::string question_text;
  std::string inference_guidance;
  bool include_evidence = false;

  // Throws ConfigError on an empty id or question.
  void validate() const;
};

// YAML with keys id, question_text, inference_guidance, include_evidence.
ScreenQuestion load_question(const std::filesystem::path& path);
ScreenQuestion parse_question(const std::string& yaml_text);

struct ScreenVerdict {
  std::string report_id;
  std::string question_id;
  std::optional<bool> verdict;  // nullopt: unscreenable
  std::vector<std::string> evidence;
  int attempts = 0;
  std::string error;  // why the report is unscreenable

  bool unscreenable() const { return !verdict.has_value(); }
  bool operator==(const ScreenVerdict&) const = default;
};

llm::SchemaSpec screen_schema(bool include_evidence);
std::string screen_system_prompt(const ScreenQuestion& q);
std::string screen_user_prompt(const corpus::ReportRecord& report);

// Spans that occur in `source` after normalize_for_match, in input order.
// Rejected spans are appended to `dropped` when given.
std::vector<std::string> verify_spans(const std::vector<std::string>& spans, const std::string& source,
                                      std::vector<std::string>* dropped = nullptr);

// A positive verdict with evidence requested but no verifiable span is sent
// back to the model as a retry; exhausting retries makes the report
// unscreenable. Unverifiable spans next to a verified one are dropped and
// logged.
ScreenVerdict screen_report(const corpus::ReportRecord& report, const ScreenQuestion& q, llm::Gateway& gateway);

struct ScreenSummary {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t unscreenable = 0;

  std::size_t total() const { return positives + negatives + unscreenable; }
  double unscreenable_fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(unscreenable) / static_cast<double>(total());
  }
  bool operator==(const ScreenSummary&) const = default;
};

struct ScreenRun {
  std::vector<ScreenVerdict> verdicts;  // sorted by report_id
  ScreenSummary summary;
  std::size_t skipped_incomplete = 0;  // records not extraction-complete
};

inline constexpr double kDefaultUnscreenableCeiling = 0.05;

ScreenRun screen_corpus(const std::vector<corpus::ReportRecord>& corpus, const ScreenQuestion& q,
                        llm::Gateway& gateway, int workers);

ScreenSummary summarize(const std::vector<ScreenVerdict>& verdicts);

// CSV columns: report_id, verdict (true/false/unscreenable), evidence
// (spans joined with '|'; a literal '|' or '\' is escaped with '\'), attempts.
std::string format_verdicts_csv(const std::vector<ScreenVerdict>& verdicts);
std::vector<ScreenVerdict> parse_verdicts_csv(const std::string& text, const std::string& question_id = "");

std::string join_spans(const std::vector<std::string>& spans);
std::vector<std::string> split_spans(const std::string& joined);

}  // namespace pfd::screen
