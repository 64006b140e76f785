#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pfd/common/digest.hpp"
#include "pfd/common/error.hpp"
#include "pfd/corpus/http.hpp"

namespace pfd::corpus {

struct PdfAttachment {
  std::string filename;
  std::string url;
  std::size_t byte_length = 0;
  std::string sha256;  // key into the fetch cache's object store
};

struct SourceDocument {
  std::string page_url;
  std::string html_body;
  std::vector<PdfAttachment> pdf_attachments;
  std::string fetched_at;  // ISO-8601 UTC of the first network fetch

  bool html_only_candidate() const { return pdf_attachments.empty(); }
};

class FetchError : public Error {
 public:
  FetchError(const std::string& what, std::string url, int status, bool permanent)
      : Error(what), url_(std::move(url)), status_(status), permanent_(permanent) {}
  const std::string& url() const { return url_; }
  int status() const { return status_; }
  // 4xx: the report is excluded. Otherwise the fetch may be retried later.
  bool permanent() const { return permanent_; }

 private:
  std::string url_;
  int status_;
  bool permanent_;
};

// Content-addressed store of raw response bytes:
//   <dir>/objects/<sha256>      exact bytes as received
//   <dir>/urls/<sha256(url)>.json   {url, sha256, content_type, fetched_at}
class FetchCache {
 public:
  explicit FetchCache(std::filesystem::path dir);

  struct Entry {
    std::string url;
    std::string sha256;
    std::string content_type;
    std::string fetched_at;
  };

  std::optional<Entry> lookup(const std::string& url) const;
  Entry put(const std::string& url, const HttpResponse& response);
  Bytes read_object(const std::string& sha256) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
};

// Downloads the report page and every linked PDF, through the cache. A
// second call for the same URL makes no network requests.
SourceDocument fetch_report(HttpFetcher& fetcher, FetchCache& cache, const std::string& page_url,
                            const RetryPolicy& retry = {});

// Anchors on the page whose target path ends in ".pdf", resolved to
// absolute URLs, in document order, de-duplicated.
std::vector<std::string> pdf_links(const std::string& page_url, const std::string& html);

}  // namespace pfd::corpus
