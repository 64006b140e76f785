#include "pfd/corpus/report.hpp"

#include "pfd/common/digest.hpp"
#include "pfd/common/error.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/url.hpp"

namespace pfd::corpus {

std::string_view to_string(ExtractionMethod m) {
  switch (m) {
    case ExtractionMethod::html_only: return "html_only";
    case ExtractionMethod::ocr_only: return "ocr_only";
    case ExtractionMethod::merged: return "merged";
  }
  return "html_only";
}

ExtractionMethod extraction_method_from_string(std::string_view s) {
  if (s == "html_only") return ExtractionMethod::html_only;
  if (s == "ocr_only") return ExtractionMethod::ocr_only;
  if (s == "merged") return ExtractionMethod::merged;
  throw ParseError("unknown extraction_method '" + std::string(s) + "'");
}

std::vector<std::pair<std::string, std::string>> canonical_sections(const ReportRecord& r) {
  std::string coroner = r.coroner_name;
  if (!r.coroner_area.empty()) {
    coroner += coroner.empty() ? r.coroner_area : ", " + r.coroner_area;
  }
  return {
      {"This report is being sent to", join(r.recipients, "; ")},
      {"Coroner", coroner},
      {"Investigation and inquest", r.section_investigation},
      {"Circumstances of the death", r.section_circumstances},
      {"Coroner's concerns", r.section_concerns},
      {"Action should be taken", r.section_action},
  };
}

std::string render_report_text(const ReportRecord& r) {
  std::string out;
  for (const auto& [heading, body] : canonical_sections(r)) {
    out += "## " + heading + "\n";
    out += body.empty() ? "[not available]" : body;
    out += "\n\n";
  }
  return out;
}

std::string section_text(const ReportRecord& r) {
  std::string out;
  for (const auto& [heading, body] : canonical_sections(r)) {
    out += body;
    out += "\n";
  }
  return out;
}

std::string make_report_id(std::string_view source_url,
                           const std::vector<std::string>& pdf_sha256s) {
  std::string material = canonical_path(source_url);
  for (const auto& h : pdf_sha256s) {
    material += "\n";
    material += h;
  }
  return sha256_hex(material).substr(0, 24);
}

bool PartialRecord::empty() const {
  return !published_date && !coroner_name && !coroner_area && !recipients &&
         !section_investigation && !section_circumstances && !section_concerns &&
         !section_action;
}

}  // namespace pfd::corpus
