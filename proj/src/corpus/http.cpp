#include "pfd/corpus/http.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "pfd/common/fs.hpp"
#include "pfd/corpus/url.hpp"

namespace pfd::corpus {

LiveFetcher::LiveFetcher(Politeness politeness) : politeness_(std::move(politeness)) {}

HttpResponse LiveFetcher::get(const std::string& url) {
  auto u = Url::parse(url);
  if (!u) throw NetworkError("malformed URL " + url);
  if (politeness_.requests_per_second > 0) {
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / politeness_.requests_per_second));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lk(mu_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_slot_);
      next_slot_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }
  ++requests_;
  httplib::Client client(u->origin());
  client.set_follow_location(true);
  client.set_connection_timeout(politeness_.timeout);
  client.set_read_timeout(politeness_.timeout);
  httplib::Headers headers{{"User-Agent", politeness_.user_agent}};
  auto res = client.Get(u->target(), headers);
  if (!res) throw NetworkError("GET " + url + " failed: " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body, res->get_header_value("Content-Type")};
}

ArchiveFetcher::ArchiveFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {
  const auto manifest = nlohmann::json::parse(read_text_file(dir_ / "manifest.json"));
  for (const auto& e : manifest.at("entries")) {
    Entry entry;
    entry.status = e.value("status", 200);
    entry.content_type = e.value("content_type", "text/html");
    if (e.contains("file")) entry.file = dir_ / e.at("file").get<std::string>();
    entry.error = e.value("error", "");
    entries_[canonical_url(e.at("url").get<std::string>())] = std::move(entry);
  }
}

HttpResponse ArchiveFetcher::get(const std::string& url) {
  ++requests_;
  auto it = entries_.find(canonical_url(url));
  if (it == entries_.end()) return HttpResponse{404, "", "text/plain"};
  const Entry& e = it->second;
  if (!e.error.empty()) throw NetworkError("GET " + url + " failed: " + e.error);
  HttpResponse r{e.status, "", e.content_type};
  if (!e.file.empty()) r.body = read_text_file(e.file);
  return r;
}

}  // namespace pfd::corpus
