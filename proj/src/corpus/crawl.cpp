#include "pfd/corpus/crawl.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "pfd/common/fs.hpp"
#include "pfd/common/log.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/html.hpp"
#include "pfd/corpus/url.hpp"

namespace pfd::corpus {

std::string index_page_url(const std::string& base_url, int n) {
  std::string base = canonical_url(base_url);
  if (n <= 1) return base;
  return base + "page/" + std::to_string(n) + "/";
}

namespace {

using nlohmann::json;

struct State {
  std::string base_url;
  int next_page = 1;
  int pages_processed = 0;
  std::string last_page_url;
  std::vector<PageRef> refs;
  std::vector<std::string> log;
};

json to_json(const State& s) {
  json refs = json::array();
  for (const auto& r : s.refs) {
    refs.push_back({{"url", r.url}, {"listed_date", r.listed_date ? json(r.listed_date->iso()) : json(nullptr)}});
  }
  return json{{"base_url", s.base_url},          {"next_page", s.next_page},
              {"pages_processed", s.pages_processed}, {"last_page_url", s.last_page_url},
              {"refs", refs},                    {"log", s.log}};
}

State from_json(const json& j) {
  State s;
  s.base_url = j.at("base_url").get<std::string>();
  s.next_page = j.at("next_page").get<int>();
  s.pages_processed = j.at("pages_processed").get<int>();
  s.last_page_url = j.value("last_page_url", "");
  for (const auto& r : j.at("refs")) {
    PageRef ref{r.at("url").get<std::string>(), std::nullopt};
    if (!r.at("listed_date").is_null()) ref.listed_date = parse_date(r.at("listed_date").get<std::string>());
    s.refs.push_back(std::move(ref));
  }
  s.log = j.value("log", std::vector<std::string>{});
  return s;
}

void save(const CrawlOptions& opt, const State& s) {
  if (opt.checkpoint_path) atomic_write(*opt.checkpoint_path, to_json(s).dump(1));
}

bool is_report_link(const Url& link, const Url& base) {
  if (link.host != base.host) return false;
  std::string base_path = base.path;
  if (!base_path.ends_with("/")) base_path += "/";
  if (!link.path.starts_with(base_path)) return false;
  std::string rest = link.path.substr(base_path.size());
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  if (rest.empty() || rest.find('/') != std::string::npos) return false;
  return rest != "page" && rest != "feed";
}

struct IndexPage {
  std::vector<PageRef> refs;
  std::optional<std::string> next_url;
  bool malformed = false;
};

IndexPage parse_index(const std::string& page_url, const HttpResponse& resp, const Url& base) {
  IndexPage out;
  if (!resp.content_type.empty() && !contains_ci(resp.content_type, "html")) {
    out.malformed = true;
    return out;
  }
  const HtmlDocument doc = parse_html(resp.body);
  if (!doc.saw_markup) {
    out.malformed = true;
    return out;
  }
  // A <time> element dates the report link that precedes it.
  std::vector<std::pair<std::size_t, PageRef>> ordered;
  for (const auto& link : doc.links) {
    const std::string abs = resolve_url(page_url, link.href);
    auto u = Url::parse(abs);
    if (!u) continue;
    if (to_lower(link.rel).find("next") != std::string::npos ||
        to_lower(link.css_class).find("next") != std::string::npos) {
      out.next_url = canonical_url(abs);
      continue;
    }
    if (is_report_link(*u, base)) ordered.emplace_back(link.order, PageRef{canonical_url(abs), std::nullopt});
  }
  for (const auto& t : doc.times) {
    auto d = parse_date(t.datetime.empty() ? t.text : t.datetime.substr(0, 10));
    if (!d) continue;
    // Last report link before this <time>.
    for (auto it = ordered.rbegin(); it != ordered.rend(); ++it) {
      if (it->first < t.order) {
        if (!it->second.listed_date) it->second.listed_date = d;
        break;
      }
    }
  }
  for (auto& [order, ref] : ordered) out.refs.push_back(std::move(ref));
  return out;
}

}  // namespace

CrawlResult crawl_index(HttpFetcher& fetcher, const std::string& base_url, const DateRange& window,
                        const CrawlOptions& options) {
  const std::string base = canonical_url(base_url);
  const auto base_parsed = Url::parse(base);
  if (!base_parsed) throw ConfigError("invalid base URL " + base_url);

  State state;
  state.base_url = base;
  bool resumed = false;
  if (options.checkpoint_path && std::filesystem::exists(*options.checkpoint_path)) {
    State saved = from_json(json::parse(read_text_file(*options.checkpoint_path)));
    if (saved.base_url == base) {
      state = std::move(saved);
      resumed = true;
      logger()->info("resuming crawl at index page {}", state.next_page);
    }
  }

  std::set<std::string> seen;
  for (const auto& r : state.refs) seen.insert(r.url);
  std::optional<std::string> next_override;
  int malformed_run = 0;

  while (state.next_page <= options.max_pages) {
    const std::string url = next_override.value_or(index_page_url(base, state.next_page));
    next_override.reset();

    HttpResponse resp;
    std::string failure;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(options.retry_backoff * attempt);
      try {
        resp = fetcher.get(url);
        failure.clear();
        if (resp.status >= 500) {
          failure = "HTTP " + std::to_string(resp.status);
          continue;
        }
        break;
      } catch (const NetworkError& e) {
        failure = e.what();
      }
    }
    if (!failure.empty()) {
      save(options, state);
      throw CrawlError("index page " + url + " failed after retries: " + failure, state.last_page_url,
                       state.pages_processed);
    }
    if (resp.status == 404 || resp.status == 410) break;  // past the last page

    IndexPage page;
    if (resp.status >= 400) {
      page.malformed = true;
    } else {
      page = parse_index(url, resp, *base_parsed);
    }
    if (page.malformed || (page.refs.empty() && !page.next_url && resp.body.find("<a") == std::string::npos)) {
      state.log.push_back("skipped malformed index page " + url);
      logger()->warn("skipped malformed index page {}", url);
      if (++malformed_run >= options.max_consecutive_malformed) {
        state.log.push_back("stopping after " + std::to_string(malformed_run) + " malformed pages");
        break;
      }
    } else {
      malformed_run = 0;
      for (auto& ref : page.refs) {
        if (ref.listed_date && !window.contains(*ref.listed_date)) continue;
        if (seen.insert(ref.url).second) state.refs.push_back(std::move(ref));
      }
    }

    state.pages_processed++;
    state.last_page_url = url;
    state.next_page++;
    if (options.checkpoint_every > 0 && state.pages_processed % options.checkpoint_every == 0) {
      save(options, state);
    }
    if (!page.malformed && page.refs.empty() && !page.next_url) break;
    if (page.next_url && *page.next_url != index_page_url(base, state.next_page)) {
      // Follow an explicit rel=next that departs from the page/<n>/ scheme.
      next_override = page.next_url;
    }
  }

  CrawlResult result;
  result.refs = std::move(state.refs);
  result.log = std::move(state.log);
  result.pages_processed = state.pages_processed;
  result.resumed = resumed;
  std::sort(result.refs.begin(), result.refs.end(), [](const PageRef& a, const PageRef& b) {
    if (a.listed_date.has_value() != b.listed_date.has_value()) return a.listed_date.has_value();
    if (a.listed_date != b.listed_date) return *a.listed_date < *b.listed_date;
    return a.url < b.url;
  });
  if (options.checkpoint_path) {
    std::error_code ec;
    std::filesystem::remove(*options.checkpoint_path, ec);
  }
  return result;
}

}  // namespace pfd::corpus
