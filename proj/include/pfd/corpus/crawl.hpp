#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pfd/common/date.hpp"
#include "pfd/common/error.hpp"
#include "pfd/corpus/http.hpp"

namespace pfd::corpus {

struct PageRef {
  std::string url;                   // canonical
  std::optional<Date> listed_date;   // date shown on the index card, if any

  bool operator==(const PageRef&) const = default;
};

struct CrawlOptions {
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  int checkpoint_every = 50;
  // When set, progress is saved here and a later call resumes from it.
  std::optional<std::filesystem::path> checkpoint_path;
  int max_pages = 100000;
  int max_consecutive_malformed = 3;
};

struct CrawlResult {
  std::vector<PageRef> refs;       // unique, ordered by (listed_date, url)
  std::vector<std::string> log;    // skipped pages and other warnings
  int pages_processed = 0;
  bool resumed = false;
};

// Raised after retries are exhausted on an index page. Progress up to
// last_page_url has been checkpointed (when a checkpoint path is set).
class CrawlError : public Error {
 public:
  CrawlError(const std::string& what, std::string last_page_url, int pages_processed)
      : Error(what), last_page_url_(std::move(last_page_url)), pages_processed_(pages_processed) {}
  const std::string& last_page_url() const { return last_page_url_; }
  int pages_processed() const { return pages_processed_; }

 private:
  std::string last_page_url_;
  int pages_processed_;
};

// URL of index page n (1-based) under base_url: base_url itself for n = 1,
// base_url + "page/<n>/" afterwards.
std::string index_page_url(const std::string& base_url, int n);

// Walks the paginated index under base_url. Report links are anchors one
// path segment below base_url. References whose listed date is known and
// outside `window` are dropped; undated references are kept for filtering
// after extraction.
CrawlResult crawl_index(HttpFetcher& fetcher, const std::string& base_url, const DateRange& window,
                        const CrawlOptions& options = {});

}  // namespace pfd::corpus
