#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pfd/common/date.hpp"

namespace pfd::corpus {

enum class ExtractionMethod { html_only, ocr_only, merged };

std::string_view to_string(ExtractionMethod m);
ExtractionMethod extraction_method_from_string(std::string_view s);

// One report after extraction. The four long-text sections follow the fixed
// headings coroners use; recipients and coroner details come first in the
// rendered form, giving six blocks in total (see canonical_sections).
struct ReportRecord {
  std::string id;
  std::string source_url;
  std::optional<Date> published_date;
  std::string coroner_name;
  std::string coroner_area;
  std::vector<std::string> recipients;
  std::string section_investigation;
  std::string section_circumstances;
  std::string section_concerns;
  std::string section_action;
  ExtractionMethod extraction_method = ExtractionMethod::html_only;
  int page_count = 0;
  bool extraction_complete = false;
  std::vector<std::string> missing_fields;

  bool operator==(const ReportRecord&) const = default;
};

// The six blocks shown to a model or a reviewer, in reading order:
// recipients, coroner, investigation, circumstances, concerns, action.
std::vector<std::pair<std::string, std::string>> canonical_sections(const ReportRecord& r);

// Plain-text rendering of canonical_sections with headings.
std::string render_report_text(const ReportRecord& r);

// Concatenated section text, used for evidence verification.
std::string section_text(const ReportRecord& r);

// Stable identifier: digest over the canonical URL path and, when the page
// carried PDFs, their byte digests in attachment order.
std::string make_report_id(std::string_view source_url,
                           const std::vector<std::string>& pdf_sha256s);

// A partial extraction result. Unset means "not provided by this source";
// `missing` lists fields the source explicitly reported as absent.
struct PartialRecord {
  std::optional<Date> published_date;
  std::optional<std::string> coroner_name;
  std::optional<std::string> coroner_area;
  std::optional<std::vector<std::string>> recipients;
  std::optional<std::string> section_investigation;
  std::optional<std::string> section_circumstances;
  std::optional<std::string> section_concerns;
  std::optional<std::string> section_action;
  std::vector<std::string> missing;
  std::vector<std::string> warnings;

  bool empty() const;
  bool operator==(const PartialRecord&) const = default;
};

}  // namespace pfd::corpus
