#pragma once

#include <span>
#include <string>
#include <vector>

#include "pfd/common/error.hpp"
#include "pfd/corpus/crawl.hpp"
#include "pfd/corpus/fetch.hpp"
#include "pfd/corpus/page_image.hpp"
#include "pfd/corpus/report.hpp"
#include "pfd/corpus/store.hpp"
#include "pfd/llm/gateway.hpp"

namespace pfd::corpus {

// The model could not produce a valid transcription within its retries.
class ExtractionIncomplete : public Error {
 public:
  ExtractionIncomplete(const std::string& what, std::vector<std::string> raw_attempts)
      : Error(what), raw_attempts_(std::move(raw_attempts)) {}
  const std::vector<std::string>& raw_attempts() const { return raw_attempts_; }

 private:
  std::vector<std::string> raw_attempts_;
};

// Every field is required; the model writes "" (or [] for recipients) to
// mark a field as absent from the document.
const llm::SchemaSpec& extraction_schema();
const std::string& extraction_system_prompt();

// Transcribes page images. `label` (the PDF filename) is quoted in the
// prompt so reviewers can trace a request back to its document.
PartialRecord ocr_extract(std::span<const PageImage> pages, llm::Gateway& gateway, const std::string& label);

// Same prompt and schema, fed with a PDF text layer instead of images.
PartialRecord text_extract(const std::string& text, llm::Gateway& gateway, const std::string& label);

// OCR sections win over HTML sections; HTML metadata wins over OCR
// metadata. Conflicting dates are reported through `log`. Idempotent:
// merge(merge(a, b), b) == merge(a, b).
PartialRecord merge_partials(const PartialRecord& ocr, const PartialRecord& html,
                             std::vector<std::string>* log = nullptr);

struct ExtractOptions {
  int dpi = kDefaultDpi;
  // Below this many text-layer characters per page a PDF counts as scanned.
  int scanned_chars_per_page = 200;
};

// Concatenated text layer of every page, and whether it is too thin to use.
struct TextLayer {
  std::string text;
  int page_count = 0;
  bool scanned = false;
};
TextLayer read_text_layer(std::span<const std::uint8_t> pdf_bytes, int scanned_chars_per_page);

// Fills a ReportRecord from merged fields. extraction_complete is true when
// section_concerns is non-empty; every empty field is listed as missing.
ReportRecord build_record(const std::string& id, const std::string& source_url, const PartialRecord& fields,
                          ExtractionMethod method, int page_count);

// Full extraction for one fetched page: the first PDF attachment is read
// (text layer, or rasterized and transcribed when scanned), the HTML is
// parsed as a fallback, and the two are merged. PDF failures never abort:
// they are logged and the HTML result stands alone.
ReportRecord extract_report(const SourceDocument& source, const FetchCache& cache, llm::Gateway& gateway,
                            const ExtractOptions& options, std::vector<std::string>& log);

struct ScrapeOptions {
  std::string base_url;
  DateRange window;
  int workers = 4;
  CrawlOptions crawl;
  RetryPolicy retry;
  ExtractOptions extract;
};

struct ScrapeSummary {
  std::size_t refs_found = 0;
  std::size_t fetch_failures = 0;
  std::size_t duplicates = 0;
  std::size_t out_of_window = 0;
  std::size_t incomplete = 0;
  std::size_t records = 0;
};

struct ScrapeResult {
  std::vector<ReportRecord> records;  // ordered by (published_date, source_url)
  std::vector<std::string> log;
  ScrapeSummary summary;
};

// crawl_index -> fetch_report -> extract_report on a worker pool, then
// dedup (same id, or same set of PDF digests) and date-window filtering.
// Output order does not depend on scheduling.
ScrapeResult scrape(HttpFetcher& fetcher, FetchCache& cache, llm::Gateway& gateway, const ScrapeOptions& options);

}  // namespace pfd::corpus
