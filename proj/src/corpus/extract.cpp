#include "pfd/corpus/extract.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pfd/common/log.hpp"
#include "pfd/common/parallel.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/html.hpp"
#include "pfd/corpus/pdf.hpp"
#include "pfd/corpus/raster.hpp"

namespace pfd::corpus {

using llm::FieldKind;
using llm::FieldSpec;

const llm::SchemaSpec& extraction_schema() {
  static const llm::SchemaSpec schema(
      "report_extraction",
      {
          FieldSpec{"published_date", FieldKind::text, true, "Date of the report as written, or \"\""},
          FieldSpec{"coroner_name", FieldKind::text, true, "Name of the coroner who signed the report, or \"\""},
          FieldSpec{"coroner_area", FieldKind::text, true, "Coroner area, or \"\""},
          FieldSpec{"recipients", FieldKind::list_of_text, true, "Each person or body the report is sent to"},
          FieldSpec{"section_investigation", FieldKind::text, true, "Investigation and inquest section, verbatim"},
          FieldSpec{"section_circumstances", FieldKind::text, true, "Circumstances of the death section, verbatim"},
          FieldSpec{"section_concerns", FieldKind::text, true, "Coroner's concerns section, verbatim"},
          FieldSpec{"section_action", FieldKind::text, true, "Action should be taken section, verbatim"},
      });
  return schema;
}

const std::string& extraction_system_prompt() {
  static const std::string prompt =
      "You transcribe Prevention of Future Deaths reports written by coroners in England and Wales.\n"
      "Copy text verbatim. Do not summarise, paraphrase, correct spelling or add commentary.\n"
      "Return one JSON object with these fields:\n"
      "- published_date: the date of the report exactly as written.\n"
      "- coroner_name and coroner_area: from the coroner details block.\n"
      "- recipients: one entry per person or organisation listed under 'This report is being sent to'.\n"
      "- section_investigation, section_circumstances, section_concerns, section_action: the full text "
      "under the headings 'Investigation and inquest', 'Circumstances of the death', "
      "'Coroner's concerns' and 'Action should be taken', without the headings themselves.\n"
      "If a field does not appear in the document, return an empty string (or an empty list for "
      "recipients). Never invent content.";
  return prompt;
}

namespace {

PartialRecord partial_from_json(const nlohmann::json& v) {
  PartialRecord rec;
  auto text_field = [&](const char* name, std::optional<std::string>& slot) {
    std::string s = trim(v.at(name).get<std::string>());
    if (s.empty()) {
      rec.missing.emplace_back(name);
    } else {
      slot = std::move(s);
    }
  };
  const std::string date_text = trim(v.at("published_date").get<std::string>());
  if (date_text.empty()) {
    rec.missing.emplace_back("published_date");
  } else if (auto d = parse_date(date_text)) {
    rec.published_date = *d;
  } else {
    rec.missing.emplace_back("published_date");
    rec.warnings.push_back("unparseable published_date '" + date_text + "'");
  }
  text_field("coroner_name", rec.coroner_name);
  text_field("coroner_area", rec.coroner_area);
  std::vector<std::string> recipients;
  for (const auto& r : v.at("recipients")) {
    std::string s = trim(r.get<std::string>());
    if (!s.empty()) recipients.push_back(std::move(s));
  }
  if (recipients.empty()) {
    rec.missing.emplace_back("recipients");
  } else {
    rec.recipients = std::move(recipients);
  }
  text_field("section_investigation", rec.section_investigation);
  text_field("section_circumstances", rec.section_circumstances);
  text_field("section_concerns", rec.section_concerns);
  text_field("section_action", rec.section_action);
  return rec;
}

PartialRecord run_extraction(const std::string& user, std::span<const PageImage> pages, llm::Gateway& gateway,
                             const std::string& label) {
  try {
    auto result = gateway.complete_structured(extraction_system_prompt(), user, pages, extraction_schema());
    return partial_from_json(result.parsed);
  } catch (const llm::SchemaViolationError& e) {
    throw ExtractionIncomplete("extraction of " + label + " failed: " + e.what(), e.raw_attempts());
  }
}

template <typename T>
const std::optional<T>& first_present(const std::optional<T>& a, const std::optional<T>& b) {
  return a ? a : b;
}

const std::optional<std::string>& first_nonempty(const std::optional<std::string>& a,
                                                 const std::optional<std::string>& b) {
  return (a && !a->empty()) ? a : b;
}

const std::optional<std::vector<std::string>>& first_nonempty(const std::optional<std::vector<std::string>>& a,
                                                              const std::optional<std::vector<std::string>>& b) {
  return (a && !a->empty()) ? a : b;
}

bool has_text(const std::optional<std::string>& s) { return s && !s->empty(); }

// Fields that carry something, ignoring empty strings.
bool contributes(const PartialRecord& p) {
  return p.published_date || has_text(p.coroner_name) || has_text(p.coroner_area) ||
         (p.recipients && !p.recipients->empty()) || has_text(p.section_investigation) ||
         has_text(p.section_circumstances) || has_text(p.section_concerns) || has_text(p.section_action);
}

}  // namespace

PartialRecord ocr_extract(std::span<const PageImage> pages, llm::Gateway& gateway, const std::string& label) {
  const std::string user = "Document: " + label + "\nTranscribe the report shown in the " +
                           std::to_string(pages.size()) +
                           " attached page image(s), in page order, into the requested fields.";
  return run_extraction(user, pages, gateway, label);
}

PartialRecord text_extract(const std::string& text, llm::Gateway& gateway, const std::string& label) {
  const std::string user = "Document: " + label +
                           "\nThe text layer of the report follows. Split it into the requested fields.\n\n" + text;
  return run_extraction(user, {}, gateway, label);
}

PartialRecord merge_partials(const PartialRecord& ocr, const PartialRecord& html, std::vector<std::string>* log) {
  PartialRecord out;
  out.section_investigation = first_nonempty(ocr.section_investigation, html.section_investigation);
  out.section_circumstances = first_nonempty(ocr.section_circumstances, html.section_circumstances);
  out.section_concerns = first_nonempty(ocr.section_concerns, html.section_concerns);
  out.section_action = first_nonempty(ocr.section_action, html.section_action);

  out.published_date = first_present(html.published_date, ocr.published_date);
  out.coroner_name = first_nonempty(html.coroner_name, ocr.coroner_name);
  out.coroner_area = first_nonempty(html.coroner_area, ocr.coroner_area);
  out.recipients = first_nonempty(html.recipients, ocr.recipients);

  if (html.published_date && ocr.published_date && *html.published_date != *ocr.published_date && log) {
    log->push_back("date conflict: HTML " + html.published_date->iso() + " kept over OCR " +
                   ocr.published_date->iso());
  }

  for (const auto* src : {&ocr, &html}) {
    for (const auto& w : src->warnings) {
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) out.warnings.push_back(w);
    }
  }
  if (!out.published_date) out.missing.emplace_back("published_date");
  if (!has_text(out.coroner_name)) out.missing.emplace_back("coroner_name");
  if (!has_text(out.coroner_area)) out.missing.emplace_back("coroner_area");
  if (!out.recipients || out.recipients->empty()) out.missing.emplace_back("recipients");
  if (!has_text(out.section_investigation)) out.missing.emplace_back("section_investigation");
  if (!has_text(out.section_circumstances)) out.missing.emplace_back("section_circumstances");
  if (!has_text(out.section_concerns)) out.missing.emplace_back("section_concerns");
  if (!has_text(out.section_action)) out.missing.emplace_back("section_action");
  return out;
}

TextLayer read_text_layer(std::span<const std::uint8_t> pdf_bytes, int scanned_chars_per_page) {
  const auto doc = pdf::Document::parse(pdf_bytes);
  TextLayer layer;
  layer.page_count = static_cast<int>(doc.page_count());
  std::size_t visible = 0;
  for (const auto& page : doc.pages()) {
    std::string t = doc.extract_text(page);
    for (char c : t) visible += std::isspace(static_cast<unsigned char>(c)) ? 0 : 1;
    if (!layer.text.empty()) layer.text += "\n";
    layer.text += t;
  }
  layer.scanned = layer.page_count > 0 &&
                  visible < static_cast<std::size_t>(scanned_chars_per_page) * static_cast<std::size_t>(layer.page_count);
  return layer;
}

ReportRecord build_record(const std::string& id, const std::string& source_url, const PartialRecord& f,
                          ExtractionMethod method, int page_count) {
  ReportRecord r;
  r.id = id;
  r.source_url = source_url;
  r.published_date = f.published_date;
  r.coroner_name = f.coroner_name.value_or("");
  r.coroner_area = f.coroner_area.value_or("");
  r.recipients = f.recipients.value_or(std::vector<std::string>{});
  r.section_investigation = f.section_investigation.value_or("");
  r.section_circumstances = f.section_circumstances.value_or("");
  r.section_concerns = f.section_concerns.value_or("");
  r.section_action = f.section_action.value_or("");
  r.extraction_method = method;
  r.page_count = page_count;
  r.extraction_complete = !r.section_concerns.empty();
  if (!r.published_date) r.missing_fields.emplace_back("published_date");
  if (r.coroner_name.empty()) r.missing_fields.emplace_back("coroner_name");
  if (r.coroner_area.empty()) r.missing_fields.emplace_back("coroner_area");
  if (r.recipients.empty()) r.missing_fields.emplace_back("recipients");
  if (r.section_investigation.empty()) r.missing_fields.emplace_back("section_investigation");
  if (r.section_circumstances.empty()) r.missing_fields.emplace_back("section_circumstances");
  if (r.section_concerns.empty()) r.missing_fields.emplace_back("section_concerns");
  if (r.section_action.empty()) r.missing_fields.emplace_back("section_action");
  return r;
}

ReportRecord extract_report(const SourceDocument& source, const FetchCache& cache, llm::Gateway& gateway,
                            const ExtractOptions& options, std::vector<std::string>& log) {
  std::vector<std::string> hashes;
  for (const auto& a : source.pdf_attachments) hashes.push_back(a.sha256);
  const std::string id = make_report_id(source.page_url, hashes);

  PartialRecord from_pdf;
  bool pdf_ok = false;
  int page_count = 0;
  if (!source.pdf_attachments.empty()) {
    const PdfAttachment& att = source.pdf_attachments.front();
    try {
      const Bytes bytes = cache.read_object(att.sha256);
      const TextLayer layer = read_text_layer(bytes, options.scanned_chars_per_page);
      page_count = layer.page_count;
      if (layer.page_count == 0) {
        log.push_back(source.page_url + ": " + att.filename + " has no pages");
      } else if (layer.scanned) {
        const auto pages = rasterize(bytes, options.dpi);
        from_pdf = ocr_extract(pages, gateway, att.filename);
        pdf_ok = true;
      } else {
        from_pdf = text_extract(layer.text, gateway, att.filename);
        pdf_ok = true;
      }
    } catch (const pdf::UnsupportedPdfError& e) {
      log.push_back(source.page_url + ": unsupported PDF " + att.filename + " (" + e.what() + "); using HTML");
    } catch (const pdf::PdfError& e) {
      log.push_back(source.page_url + ": corrupt PDF " + att.filename + " (" + e.what() + "); using HTML");
    } catch (const RasterError& e) {
      log.push_back(source.page_url + ": cannot rasterize " + att.filename + " (" + e.what() + "); using HTML");
    } catch (const ExtractionIncomplete& e) {
      log.push_back(source.page_url + ": " + e.what() + "; queued for HTML fallback");
    }
  }

  const PartialRecord from_html = html_fallback(source.html_body);
  for (const auto& w : from_html.warnings) log.push_back(source.page_url + ": " + w);
  for (const auto& w : from_pdf.warnings) log.push_back(source.page_url + ": " + w);
  std::vector<std::string> merge_log;
  const PartialRecord merged = merge_partials(from_pdf, from_html, &merge_log);
  for (const auto& m : merge_log) log.push_back(source.page_url + ": " + m);

  ExtractionMethod method = ExtractionMethod::html_only;
  if (pdf_ok && contributes(from_pdf)) {
    method = contributes(from_html) ? ExtractionMethod::merged : ExtractionMethod::ocr_only;
  }
  return build_record(id, source.page_url, merged, method, page_count);
}

ScrapeResult scrape(HttpFetcher& fetcher, FetchCache& cache, llm::Gateway& gateway, const ScrapeOptions& options) {
  ScrapeResult result;
  CrawlResult crawl = crawl_index(fetcher, options.base_url, options.window, options.crawl);
  result.log = crawl.log;
  result.summary.refs_found = crawl.refs.size();

  struct Slot {
    std::optional<ReportRecord> record;
    std::vector<std::string> hashes;
    std::vector<std::string> log;
    bool fetch_failed = false;
  };
  std::vector<Slot> slots(crawl.refs.size());
  parallel_for(crawl.refs.size(), static_cast<std::size_t>(std::max(1, options.workers)), [&](std::size_t i) {
    Slot& slot = slots[i];
    const std::string& url = crawl.refs[i].url;
    SourceDocument doc;
    try {
      doc = fetch_report(fetcher, cache, url, options.retry);
    } catch (const FetchError& e) {
      slot.fetch_failed = true;
      slot.log.push_back(url + ": " + (e.permanent() ? "excluded: " : "fetch failed, rerun to resume: ") + e.what());
      return;
    }
    for (const auto& a : doc.pdf_attachments) slot.hashes.push_back(a.sha256);
    slot.record = extract_report(doc, cache, gateway, options.extract, slot.log);
  });

  std::set<std::string> seen_ids;
  std::set<std::vector<std::string>> seen_pdf_sets;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Slot& slot = slots[i];
    result.log.insert(result.log.end(), slot.log.begin(), slot.log.end());
    if (slot.fetch_failed) {
      ++result.summary.fetch_failures;
      continue;
    }
    ReportRecord& rec = *slot.record;
    if (rec.published_date && !options.window.contains(*rec.published_date)) {
      ++result.summary.out_of_window;
      result.log.push_back(rec.source_url + ": dated " + rec.published_date->iso() + ", outside the window");
      continue;
    }
    std::vector<std::string> pdf_set = slot.hashes;
    std::sort(pdf_set.begin(), pdf_set.end());
    const bool dup_id = !seen_ids.insert(rec.id).second;
    const bool dup_pdf = !pdf_set.empty() && !seen_pdf_sets.insert(pdf_set).second;
    if (dup_id || dup_pdf) {
      ++result.summary.duplicates;
      result.log.push_back(rec.source_url + ": duplicate of an earlier report, dropped");
      continue;
    }
    if (!rec.extraction_complete) ++result.summary.incomplete;
    result.records.push_back(std::move(rec));
  }
  std::stable_sort(result.records.begin(), result.records.end(), [](const ReportRecord& a, const ReportRecord& b) {
    // Undated records sort last.
    const bool ad = a.published_date.has_value();
    const bool bd = b.published_date.has_value();
    if (ad != bd) return ad;
    if (ad && *a.published_date != *b.published_date) return *a.published_date < *b.published_date;
    return a.source_url < b.source_url;
  });
  result.summary.records = result.records.size();
  for (const auto& line : result.log) logger()->debug("{}", line);
  return result;
}

}  // namespace pfd::corpus
