#include "pfd/corpus/fetch.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/html.hpp"
#include "pfd/corpus/url.hpp"

namespace pfd::corpus {

namespace {

std::string now_utc() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

}  // namespace

FetchCache::FetchCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_ / "objects");
  std::filesystem::create_directories(dir_ / "urls");
}

std::optional<FetchCache::Entry> FetchCache::lookup(const std::string& url) const {
  const auto path = dir_ / "urls" / (sha256_hex(canonical_url(url)) + ".json");
  std::lock_guard lk(mu_);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto j = nlohmann::json::parse(read_text_file(path));
  Entry e{j.at("url"), j.at("sha256"), j.value("content_type", ""), j.value("fetched_at", "")};
  if (!std::filesystem::exists(dir_ / "objects" / e.sha256)) return std::nullopt;
  return e;
}

FetchCache::Entry FetchCache::put(const std::string& url, const HttpResponse& response) {
  Entry e{canonical_url(url), sha256_hex(response.body), response.content_type, now_utc()};
  std::lock_guard lk(mu_);
  const auto obj = dir_ / "objects" / e.sha256;
  if (!std::filesystem::exists(obj)) atomic_write(obj, response.body);
  const nlohmann::json j{{"url", e.url}, {"sha256", e.sha256}, {"content_type", e.content_type},
                         {"fetched_at", e.fetched_at}};
  atomic_write(dir_ / "urls" / (sha256_hex(e.url) + ".json"), j.dump(1));
  return e;
}

Bytes FetchCache::read_object(const std::string& sha256) const {
  return read_binary_file(dir_ / "objects" / sha256);
}

std::vector<std::string> pdf_links(const std::string& page_url, const std::string& html) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& link : parse_html(html).links) {
    const std::string abs = resolve_url(page_url, link.href);
    auto u = Url::parse(abs);
    if (!u || !to_lower(u->path).ends_with(".pdf")) continue;
    if (seen.insert(abs).second) out.push_back(abs);
  }
  return out;
}

namespace {

FetchCache::Entry fetch_cached(HttpFetcher& fetcher, FetchCache& cache, const std::string& url,
                               const RetryPolicy& retry) {
  if (auto hit = cache.lookup(url)) return *hit;
  std::string failure;
  int last_status = 0;
  for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry.backoff * attempt);
    try {
      HttpResponse resp = fetcher.get(url);
      last_status = resp.status;
      if (resp.status >= 200 && resp.status < 300) return cache.put(url, resp);
      if (resp.status >= 400 && resp.status < 500) {
        throw FetchError("GET " + url + " returned HTTP " + std::to_string(resp.status), url, resp.status, true);
      }
      failure = "HTTP " + std::to_string(resp.status);
    } catch (const NetworkError& e) {
      failure = e.what();
    }
  }
  throw FetchError("GET " + url + " failed after retries: " + failure, url, last_status, false);
}

}  // namespace

SourceDocument fetch_report(HttpFetcher& fetcher, FetchCache& cache, const std::string& page_url,
                            const RetryPolicy& retry) {
  SourceDocument doc;
  doc.page_url = canonical_url(page_url);
  const auto page = fetch_cached(fetcher, cache, doc.page_url, retry);
  doc.fetched_at = page.fetched_at;
  const Bytes html = cache.read_object(page.sha256);
  doc.html_body.assign(html.begin(), html.end());
  for (const auto& link : pdf_links(doc.page_url, doc.html_body)) {
    const auto entry = fetch_cached(fetcher, cache, link, retry);
    PdfAttachment att;
    att.url = link;
    att.filename = percent_decode(link.substr(link.rfind('/') + 1));
    att.sha256 = entry.sha256;
    att.byte_length = static_cast<std::size_t>(
        std::filesystem::file_size(cache.dir() / "objects" / entry.sha256));
    doc.pdf_attachments.push_back(std::move(att));
  }
  if (trim(doc.html_body).empty() && doc.pdf_attachments.empty()) {
    throw FetchError("report page " + doc.page_url + " has neither text nor attachments", doc.page_url, 200, true);
  }
  return doc;
}

}  // namespace pfd::corpus
