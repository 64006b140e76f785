#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unistd.h>

#include "gen.hpp"
#include "pdf_builder.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/crawl.hpp"
#include "pfd/corpus/extract.hpp"
#include "pfd/corpus/fetch.hpp"
#include "pfd/corpus/html.hpp"
#include "pfd/corpus/store.hpp"
#include "pfd/corpus/url.hpp"
#include "pfd/llm/gateway.hpp"
#include "records.hpp"

using namespace pfd::corpus;
using pfd::Date;
using pfd::testing::Gen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kBase = "https://reports.test/pfd/";

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pfd_corpus_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// In-memory web. Unknown URLs answer 404; URLs in `down` throw NetworkError.
class MapFetcher : public HttpFetcher {
 public:
  HttpResponse get(const std::string& url) override {
    ++requests;
    hits[url]++;
    if (down.count(url)) throw NetworkError("connection reset for " + url);
    auto it = pages.find(url);
    if (it == pages.end()) return {404, "not found", "text/html"};
    return it->second;
  }
  std::size_t request_count() const override { return requests; }

  void html(const std::string& url, const std::string& body) { pages[url] = {200, body, "text/html; charset=utf-8"}; }
  void pdf(const std::string& url, const std::string& body) { pages[url] = {200, body, "application/pdf"}; }

  std::map<std::string, HttpResponse> pages;
  std::map<std::string, int> hits;
  std::set<std::string> down;
  std::size_t requests = 0;
};

struct Listed {
  std::string slug;
  std::optional<Date> date;
};

// Paginated index in the same shape as the live site: cards with a link and
// a <time>, and a rel=next link on every page but the last.
void add_index(MapFetcher& web, const std::vector<Listed>& items, std::size_t per_page) {
  const std::size_t pages = std::max<std::size_t>(1, (items.size() + per_page - 1) / per_page);
  for (std::size_t p = 0; p < pages; ++p) {
    std::string h = "<html><body><main>";
    for (std::size_t i = p * per_page; i < std::min(items.size(), (p + 1) * per_page); ++i) {
      h += "<article><h3><a href=\"" + kBase + items[i].slug + "/\">Report " + items[i].slug + "</a></h3>";
      if (items[i].date) h += "<time datetime=\"" + items[i].date->iso() + "\">date</time>";
      h += "</article>";
    }
    h += "<nav>";
    if (p + 1 < pages) h += "<a rel=\"next\" href=\"" + index_page_url(kBase, static_cast<int>(p + 2)) + "\">Next</a>";
    h += "</nav></main></body></html>";
    web.html(index_page_url(kBase, static_cast<int>(p + 1)), h);
  }
}

std::string long_text(const std::string& tag, int words) {
  std::string s;
  for (int i = 0; i < words; ++i) s += (i ? " " : "") + tag + std::to_string(i);
  return s;
}

std::string report_page(const std::string& title, const std::string& pdf_href, const std::string& date_ddmmyyyy) {
  std::string h = "<html><head><title>" + title + "</title></head><body><article><h1>" + title + "</h1>";
  if (!date_ddmmyyyy.empty())
    h += "<table><tr><td>Date of report</td><td>" + date_ddmmyyyy + "</td></tr>"
         "<tr><td>Coroner name</td><td>A Coroner</td></tr></table>";
  if (!pdf_href.empty()) h += "<p><a href=\"" + pdf_href + "\">Download</a></p>";
  return h + "</article></body></html>";
}

json extraction_reply(const std::string& tag, const std::string& date) {
  return json{{"published_date", date},
              {"coroner_name", "Coroner " + tag},
              {"coroner_area", "Area " + tag},
              {"recipients", {"Chief Executive, Trust " + tag}},
              {"section_investigation", "Investigation " + tag},
              {"section_circumstances", "Circumstances " + tag},
              {"section_concerns", "Concerns " + tag},
              {"section_action", "Action " + tag}};
}

// Answers extraction requests by the document name quoted in the prompt.
std::shared_ptr<pfd::llm::ScriptedTransport> extraction_model(std::map<std::string, json> by_doc) {
  return std::make_shared<pfd::llm::ScriptedTransport>([by_doc](const json& req) {
    const std::string text = pfd::llm::request_text(req);
    for (const auto& [doc, reply] : by_doc) {
      if (text.find("Document: " + doc + "\n") != std::string::npos) return pfd::llm::ok_response(reply.dump(), 50, 50);
    }
    return pfd::llm::TransportResponse{500, "no script for request", std::nullopt, ""};
  });
}

pfd::llm::ModelConfig model_config() {
  pfd::llm::ModelConfig c;
  c.endpoint_url = "https://model.test/v1/chat/completions";
  c.model_name = "fixture";
  c.max_retries = 1;
  c.backoff = std::chrono::milliseconds(0);
  c.api_key_env = "";
  return c;
}

std::optional<std::string> rnd_text(Gen& g) {
  switch (g.range(0, 2)) {
    case 0: return std::nullopt;
    case 1: return std::string();
    default: return g.sentence(1, 4);
  }
}

PartialRecord random_partial(Gen& g) {
  PartialRecord p;
  if (g.coin()) p.published_date = Date::from_ymd(g.range(2013, 2024), g.range(1, 12), g.range(1, 28));
  p.coroner_name = rnd_text(g);
  p.coroner_area = rnd_text(g);
  if (g.coin()) {
    p.recipients = std::vector<std::string>{};
    for (int i = 0, n = g.range(0, 3); i < n; ++i) p.recipients->push_back(g.sentence(1, 3));
  }
  p.section_investigation = rnd_text(g);
  p.section_circumstances = rnd_text(g);
  p.section_concerns = rnd_text(g);
  p.section_action = rnd_text(g);
  if (g.coin(0.3)) p.warnings.push_back("w" + std::to_string(g.range(0, 3)));
  return p;
}

CrawlOptions quick_crawl() {
  CrawlOptions o;
  o.max_retries = 0;
  o.retry_backoff = {};
  return o;
}

bool has(const std::optional<std::string>& s) { return s && !s->empty(); }

}  // namespace

TEST_CASE("HTML fallback reads the metadata table and section headings") {
  const std::string page =
      "<html><body><h1>Jo Bloggs: Prevention of future deaths report</h1>"
      "<table><tr><td>Date of report</td><td>24/04/2015</td></tr>"
      "<tr><td>Coroner name</td><td>Gareth Lewis</td></tr>"
      "<tr><td>Coroner area</td><td>Mid Fenland</td></tr>"
      "<tr><td>This report is being sent to</td><td>Chief Executive, Council | Chief Constable</td></tr></table>"
      "<h2>Investigation and Inquest</h2><p>On 10 January I commenced an investigation.</p>"
      "<h2>Circumstances of the Death</h2><p>Jo died at home.</p><p>Second paragraph &amp; more.</p>"
      "<h2>Coroner&#39;s Concerns</h2><p>(1) The school was not told.</p>"
      "<h2>Action should be taken</h2><p>Action text.</p><script>var x = '<h2>Nope</h2>';</script></body></html>";
  const auto rec = html_fallback(page);
  CHECK(rec.published_date == Date::from_ymd(2015, 4, 24));
  CHECK(rec.coroner_name == "Gareth Lewis");
  CHECK(rec.coroner_area == "Mid Fenland");
  REQUIRE(rec.recipients);
  CHECK(rec.recipients->size() == 2);
  CHECK(rec.section_investigation->find("commenced an investigation") != std::string::npos);
  CHECK(rec.section_circumstances->find("Second paragraph & more.") != std::string::npos);
  CHECK(rec.section_concerns == "(1) The school was not told.");
  CHECK(rec.section_action->find("Nope") == std::string::npos);

  const auto empty = html_fallback("");
  CHECK(empty.empty());
  CHECK_FALSE(empty.warnings.empty());
  CHECK(html_fallback("<html><body><p>nothing here</p></body></html>").empty());
  CHECK_NOTHROW(html_fallback("<<<>>><div <p></table></tr>&#xZZ;"));
}

TEST_CASE("a fixture page parses the same way") {
  const auto body = pfd::read_text_file(fs::path(PFD_FIXTURE_DIR) / "archive" / "page-0011.html");
  const auto rec = html_fallback(body);
  CHECK(rec.coroner_area == "Mid Fenland");
  CHECK(rec.recipients->size() == 2);
  CHECK(has(rec.section_investigation));
  CHECK(rec.section_concerns->find("closed the referral") != std::string::npos);
}

TEST_CASE("merge: OCR wins sections, HTML wins metadata") {
  PartialRecord ocr, html;
  ocr.section_concerns = "ocr concerns";
  html.section_concerns = "html concerns";
  html.section_action = "html action";
  ocr.published_date = Date::from_ymd(2020, 1, 2);
  html.published_date = Date::from_ymd(2020, 1, 1);
  ocr.coroner_name = "OCR Name";
  html.coroner_name = "";
  html.coroner_area = "HTML Area";
  ocr.coroner_area = "OCR Area";
  std::vector<std::string> log;
  const auto m = merge_partials(ocr, html, &log);
  CHECK(m.section_concerns == "ocr concerns");
  CHECK(m.section_action == "html action");
  CHECK(m.published_date == Date::from_ymd(2020, 1, 1));
  CHECK(m.coroner_name == "OCR Name");  // empty HTML value does not win
  CHECK(m.coroner_area == "HTML Area");
  REQUIRE(log.size() == 1);
  CHECK(log[0].find("date conflict") != std::string::npos);
}

TEST_CASE("property: merge is idempotent and respects precedence") {
  Gen g(404);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_partial(g);
    const auto b = random_partial(g);
    const auto m = merge_partials(a, b);
    CHECK(merge_partials(m, b) == m);
    // Oracle for precedence, field by field.
    CHECK(has(m.section_concerns) == (has(a.section_concerns) || has(b.section_concerns)));
    if (has(a.section_concerns)) CHECK(m.section_concerns == a.section_concerns);
    if (has(b.coroner_name)) CHECK(m.coroner_name == b.coroner_name);
    if (!has(b.coroner_name) && has(a.coroner_name)) CHECK(m.coroner_name == a.coroner_name);
    CHECK(m.published_date == (b.published_date ? b.published_date : a.published_date));
    const bool concerns_missing =
        std::find(m.missing.begin(), m.missing.end(), "section_concerns") != m.missing.end();
    CHECK(concerns_missing == !has(m.section_concerns));
  }
}

TEST_CASE("build_record marks completeness by the concerns section") {
  PartialRecord p;
  p.section_circumstances = "text";
  auto r = build_record("id1", "https://x.test/a/", p, ExtractionMethod::html_only, 0);
  CHECK_FALSE(r.extraction_complete);
  CHECK(r.missing_fields.size() == 7);
  p.section_concerns = "concerns";
  r = build_record("id1", "https://x.test/a/", p, ExtractionMethod::merged, 3);
  CHECK(r.extraction_complete);
  CHECK(r.page_count == 3);
}

TEST_CASE("report ids ignore the host and depend on the PDFs") {
  const auto a = make_report_id("https://a.test/pfd/jo-bloggs/", {"h1"});
  CHECK(a == make_report_id("http://mirror.test/PFD/jo-bloggs", {"h1"}));
  CHECK(a != make_report_id("https://a.test/pfd/jo-bloggs/", {"h2"}));
  CHECK(a != make_report_id("https://a.test/pfd/jo-bloggs-2/", {"h1"}));
}

TEST_CASE("OCR of a scanned report recovers the transcript") {
  // The scripted model stands in for the vision model; the test checks the
  // path from scanned PDF to record: page images attached, transcript kept.
  const std::string concerns =
      "During the course of the inquest the evidence revealed matters giving rise to concern. "
      "(1) The school was not told by the hospital that the young person had attended after an overdose. "
      "(2) Children's social care closed the referral without visiting the family.";
  const auto pdf = pfd::testing::PdfBuilder()
                       .image_page(pfd::testing::scan_like_image(120, 170, 1))
                       .image_page(pfd::testing::scan_like_image(120, 170, 2))
                       .build();
  const auto pages = rasterize(pfd::to_bytes(pdf), 100);
  REQUIRE(pages.size() == 2);

  json reply = extraction_reply("S", "3rd March 2019");
  reply["section_concerns"] = concerns;
  std::size_t images_seen = 0;
  auto transport = std::make_shared<pfd::llm::ScriptedTransport>([&](const json& req) {
    for (const auto& part : req.at("messages")[1].at("content"))
      if (part.at("type") == "image_url") ++images_seen;
    return pfd::llm::ok_response(reply.dump());
  });
  pfd::llm::Gateway gw(model_config(), transport);
  const auto rec = ocr_extract(pages, gw, "scan.pdf");
  CHECK(images_seen == 2);
  CHECK(rec.published_date == Date::from_ymd(2019, 3, 3));

  const auto truth = pfd::split_whitespace(concerns);
  const auto got = pfd::split_whitespace(rec.section_concerns.value_or(""));
  std::multiset<std::string> pool(got.begin(), got.end());
  std::size_t found = 0;
  for (const auto& t : truth) {
    if (auto it = pool.find(t); it != pool.end()) {
      ++found;
      pool.erase(it);
    }
  }
  CHECK(static_cast<double>(found) / static_cast<double>(truth.size()) >= 0.90);
}

TEST_CASE("extraction that never validates is reported, not invented") {
  auto transport = std::make_shared<pfd::llm::ScriptedTransport>(
      [](const json&) { return pfd::llm::ok_response("{\"published_date\": \"x\"}"); });
  pfd::llm::Gateway gw(model_config(), transport);
  try {
    text_extract("some text", gw, "doc.pdf");
    FAIL("expected ExtractionIncomplete");
  } catch (const ExtractionIncomplete& e) {
    CHECK(e.raw_attempts().size() == 2);
  }
}

TEST_CASE("fetching goes through the cache") {
  MapFetcher web;
  const auto pdf = pfd::testing::PdfBuilder().text_page({"hello"}).build();
  web.html(kBase + "jo/", report_page("Jo", "/files/jo.pdf", "01/02/2020"));
  web.pdf("https://reports.test/files/jo.pdf", pdf);
  const auto dir = temp_dir("fetch");
  FetchCache cache(dir);

  const auto doc = fetch_report(web, cache, kBase + "jo/");
  CHECK(web.requests == 2);
  REQUIRE(doc.pdf_attachments.size() == 1);
  CHECK(doc.pdf_attachments[0].filename == "jo.pdf");
  CHECK(doc.pdf_attachments[0].sha256 == pfd::sha256_hex(pdf));
  CHECK(pfd::to_string(cache.read_object(doc.pdf_attachments[0].sha256)) == pdf);
  CHECK(fs::exists(dir / "objects" / pfd::sha256_hex(pdf)));

  const auto again = fetch_report(web, cache, kBase + "jo/");
  CHECK(web.requests == 2);
  CHECK(again.html_body == doc.html_body);
  CHECK(again.fetched_at == doc.fetched_at);

  // A fresh cache object over the same directory still hits.
  FetchCache reopened(dir);
  fetch_report(web, reopened, kBase + "jo/");
  CHECK(web.requests == 2);
  fs::remove_all(dir);
}

TEST_CASE("fetch failures are typed by permanence") {
  MapFetcher web;
  web.pages[kBase + "flaky/"] = {503, "busy", "text/html"};
  web.down.insert(kBase + "gone-dark/");
  const auto dir = temp_dir("fetch_err");
  FetchCache cache(dir);
  const RetryPolicy quick{2, std::chrono::milliseconds(0)};
  try {
    fetch_report(web, cache, kBase + "missing/", quick);
    FAIL("expected FetchError");
  } catch (const FetchError& e) {
    CHECK(e.permanent());
    CHECK(e.status() == 404);
  }
  CHECK(web.hits[kBase + "missing/"] == 1);
  try {
    fetch_report(web, cache, kBase + "flaky/", quick);
    FAIL("expected FetchError");
  } catch (const FetchError& e) {
    CHECK_FALSE(e.permanent());
  }
  CHECK(web.hits[kBase + "flaky/"] == 3);
  CHECK_THROWS_AS(fetch_report(web, cache, kBase + "gone-dark/", quick), FetchError);
  CHECK_FALSE(cache.lookup(kBase + "flaky/"));
  fs::remove_all(dir);
}

TEST_CASE("pdf links are resolved, ordered and unique") {
  const auto links = pdf_links(kBase + "jo/",
                               "<a href=\"a.pdf\">1</a><a href=\"/x/B.PDF\">2</a><a href=\"a.pdf#page=2\">3</a>"
                               "<a href=\"notes.html\">4</a>");
  REQUIRE(links.size() == 2);
  CHECK(links[0] == kBase + "jo/a.pdf");
  CHECK(links[1] == "https://reports.test/x/B.PDF");
}

TEST_CASE("crawl keeps undated links and drops dated ones outside the window") {
  MapFetcher web;
  add_index(web,
            {{"new", Date::from_ymd(2024, 2, 1)},
             {"in-b", Date::from_ymd(2019, 5, 5)},
             {"undated", std::nullopt},
             {"in-a", Date::from_ymd(2016, 1, 1)},
             {"in-b", Date::from_ymd(2019, 5, 5)},
             {"old", Date::from_ymd(2012, 6, 1)}},
            2);
  const pfd::DateRange window{Date::from_ymd(2015, 1, 1), Date::from_ymd(2023, 12, 31)};
  const auto r = crawl_index(web, kBase, window, quick_crawl());
  std::vector<std::string> urls;
  for (const auto& ref : r.refs) urls.push_back(ref.url);
  CHECK(urls == std::vector<std::string>{kBase + "in-a/", kBase + "in-b/", kBase + "undated/"});
  CHECK(r.pages_processed == 3);
  CHECK_FALSE(r.refs[2].listed_date);
}

TEST_CASE("property: an interrupted crawl resumes to the same result") {
  const pfd::DateRange window{Date::from_ymd(2015, 1, 1), Date::from_ymd(2023, 12, 31)};
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    Gen g(seed);
    std::vector<Listed> items;
    for (int i = 0, n = g.range(5, 60); i < n; ++i) {
      std::optional<Date> d;
      if (g.coin(0.9)) d = Date::from_ymd(g.range(2013, 2024), g.range(1, 12), g.range(1, 28));
      items.push_back({"r" + std::to_string(g.range(0, 80)), d});
    }
    const std::size_t per_page = static_cast<std::size_t>(g.range(2, 8));
    MapFetcher web;
    add_index(web, items, per_page);
    const auto reference = crawl_index(web, kBase, window, quick_crawl());

    const int total_pages = static_cast<int>((items.size() + per_page - 1) / per_page);
    if (total_pages < 2) continue;
    const int broken = g.range(2, total_pages);
    const auto dir = temp_dir("crawl");
    CrawlOptions opt{.max_retries = 1, .retry_backoff = {}, .checkpoint_every = 1,
                     .checkpoint_path = dir / "crawl.json"};
    web.down.insert(index_page_url(kBase, broken));
    try {
      crawl_index(web, kBase, window, opt);
      FAIL("expected CrawlError");
    } catch (const CrawlError& e) {
      CHECK(e.pages_processed() == broken - 1);
    }
    CHECK(fs::exists(dir / "crawl.json"));
    web.down.clear();
    web.hits.clear();
    const auto resumed = crawl_index(web, kBase, window, opt);
    CAPTURE(seed);
    CHECK(resumed.resumed);
    CHECK(resumed.refs == reference.refs);
    CHECK(web.hits[index_page_url(kBase, 1)] == (broken == 1 ? 1 : 0));  // earlier pages not refetched
    CHECK_FALSE(fs::exists(dir / "crawl.json"));
    fs::remove_all(dir);
  }
}

TEST_CASE("corpus store round-trips, locks and detects truncation") {
  const auto dir = temp_dir("store");
  const auto path = dir / "corpus.jsonl";
  Gen g(9);
  std::vector<ReportRecord> recs;
  for (int i = 0; i < 25; ++i) {
    auto r = pfd::testing::make_record("id" + std::to_string(i), g.sentence(), "Line one\nline \"two\"\té");
    if (g.coin()) r.published_date.reset();
    r.extraction_method = static_cast<ExtractionMethod>(g.range(0, 2));
    r.page_count = g.range(0, 9);
    if (g.coin()) r.recipients.clear();
    recs.push_back(r);
  }
  store_corpus(recs, path);
  CHECK(load_corpus(path) == recs);
  for (const auto& r : recs) CHECK(parse_record(serialize_record(r)) == r);

  {
    pfd::FileLock held(path);
    CHECK_THROWS_AS(store_corpus({}, path), pfd::LockError);
  }
  CHECK(load_corpus(path).size() == 25);

  const auto full = pfd::read_text_file(path);
  pfd::atomic_write(dir / "cut.jsonl", full.substr(0, full.size() - 30));
  try {
    load_corpus(dir / "cut.jsonl");
    FAIL("expected StoreError");
  } catch (const StoreError& e) {
    CHECK(e.line() == 26);
  }
  const auto nl = full.find('\n');
  pfd::atomic_write(dir / "short.jsonl", full.substr(0, full.rfind('\n', full.size() - 2) + 1));
  CHECK_THROWS_AS(load_corpus(dir / "short.jsonl"), StoreError);
  pfd::atomic_write(dir / "v2.jsonl",
                    "{\"format\":\"pfd-corpus\",\"schema_version\":2,\"record_count\":0}\n");
  CHECK_THROWS_AS(load_corpus(dir / "v2.jsonl"), MigrationRequiredError);
  pfd::atomic_write(dir / "other.jsonl", "{\"format\":\"something\"}\n" + full.substr(nl + 1));
  CHECK_THROWS_AS(load_corpus(dir / "other.jsonl"), StoreError);
  fs::remove_all(dir);
}

TEST_CASE("property: scrape output is unique and independent of scheduling") {
  const pfd::DateRange window{Date::from_ymd(2015, 1, 1), Date::from_ymd(2023, 12, 31)};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Gen g(seed * 31);
    MapFetcher web;
    std::map<std::string, json> replies;
    std::vector<Listed> listing;
    std::vector<std::string> pdf_urls;
    std::vector<Date> dates;
    const int n = g.range(4, 14);
    for (int i = 0; i < n; ++i) {
      const std::string slug = "report-" + std::to_string(i);
      const Date d = Date::from_ymd(g.range(2014, 2024), g.range(1, 12), g.range(1, 28));
      const std::string file = slug + ".pdf";
      const std::string pdf = pfd::testing::PdfBuilder().text_page(pfd::testing::wrap_lines({long_text(slug, 80)})).build();
      const std::string pdf_url = "https://reports.test/files/" + file;
      web.pdf(pdf_url, pdf);
      web.html(kBase + slug + "/", report_page(slug, pdf_url, ""));
      replies[file] = extraction_reply(slug, d.iso());
      listing.push_back({slug, g.coin(0.8) ? std::optional<Date>(d) : std::nullopt});
      pdf_urls.push_back(pdf_url);
      dates.push_back(d);
    }
    // Duplicates: the same link listed twice, and a page re-hosting an existing PDF.
    const int dup = g.range(0, n - 1);
    listing.push_back(listing[static_cast<std::size_t>(dup)]);
    const int rehost = g.range(0, n - 1);
    web.html(kBase + "copy/", report_page("copy", pdf_urls[static_cast<std::size_t>(rehost)], ""));
    listing.push_back({"copy", std::nullopt});
    g.shuffle(listing);
    add_index(web, listing, 5);

    std::vector<ScrapeResult> results;
    for (int workers : {1, 4}) {
      const auto dir = temp_dir("scrape");
      FetchCache cache(dir);
      pfd::llm::Gateway gw(model_config(), extraction_model(replies));
      ScrapeOptions opt;
      opt.base_url = kBase;
      opt.window = window;
      opt.workers = workers;
      opt.crawl.retry_backoff = {};
      opt.retry.backoff = {};
      results.push_back(scrape(web, cache, gw, opt));
      fs::remove_all(dir);
    }
    CAPTURE(seed);
    const auto& r = results[0];
    CHECK(r.records == results[1].records);
    std::set<std::string> ids, urls;
    for (const auto& rec : r.records) {
      ids.insert(rec.id);
      CHECK(rec.published_date);
      CHECK(window.contains(*rec.published_date));
      CHECK(rec.extraction_method == ExtractionMethod::ocr_only);  // the pages carry no metadata
    }
    CHECK(ids.size() == r.records.size());
    // The repeated link is merged by the crawl; the re-hosted PDF is dropped
    // here unless its date already put it outside the window.
    CHECK(r.summary.duplicates == (window.contains(dates[static_cast<std::size_t>(rehost)]) ? 1u : 0u));
    std::set<std::string> expected_refs;
    for (const auto& l : listing)
      if (!l.date || window.contains(*l.date)) expected_refs.insert(l.slug);
    CHECK(r.summary.refs_found == expected_refs.size());
    CHECK(r.summary.records + r.summary.duplicates + r.summary.out_of_window + r.summary.fetch_failures ==
          r.summary.refs_found);
    CHECK(std::is_sorted(r.records.begin(), r.records.end(), [](const ReportRecord& a, const ReportRecord& b) {
      return a.published_date < b.published_date;
    }));
  }
}
