#include <doctest.h>

#include <filesystem>
#include <set>
#include <unistd.h>

#include "gen.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"
#include "pfd/validation/adjudication.hpp"
#include "pfd/validation/consensus.hpp"
#include "pfd/validation/sample.hpp"
#include "records.hpp"

using namespace pfd::validation;
using pfd::testing::Gen;
using pfd::testing::make_record;
using pfd::testing::make_verdict;
namespace fs = std::filesystem;

namespace {

struct Pool {
  std::vector<pfd::screen::ScreenVerdict> verdicts;
  std::vector<pfd::corpus::ReportRecord> reports;
};

Pool make_pool(int n_pos, int n_neg, int n_unscreenable = 0) {
  Pool p;
  int k = 0;
  auto add = [&](std::optional<bool> v) {
    char id[16];
    std::snprintf(id, sizeof id, "r%04d", k++);
    p.reports.push_back(make_record(id));
    p.verdicts.push_back(make_verdict(id, v));
  };
  for (int i = 0; i < n_pos; ++i) add(true);
  for (int i = 0; i < n_neg; ++i) add(false);
  for (int i = 0; i < n_unscreenable; ++i) add(std::nullopt);
  return p;
}

std::vector<std::string> ids(const AdjudicationSample& s) {
  std::vector<std::string> out;
  for (const auto& it : s.items) out.push_back(it.item_id);
  return out;
}

// Walks a payload and collects every key and every boolean value.
void scan(const nlohmann::json& j, std::vector<std::string>& keys, int& booleans) {
  if (j.is_boolean()) ++booleans;
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      keys.push_back(k);
      scan(v, keys, booleans);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) scan(v, keys, booleans);
  }
}

bool leaks_verdict(const nlohmann::json& payload) {
  std::vector<std::string> keys;
  int booleans = 0;
  scan(payload, keys, booleans);
  for (const auto& k : keys) {
    const auto lk = pfd::to_lower(k);
    for (const char* bad : {"verdict", "model", "match", "predict", "screen", "hidden", "positive"}) {
      if (lk.find(bad) != std::string::npos) return true;
    }
  }
  return booleans > 0;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pfd_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("bounded_draw stays in range and covers it") {
  std::mt19937_64 rng(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = bounded_draw(rng, 7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 800);
  CHECK_THROWS_AS(bounded_draw(rng, 0), StatsError);
}

TEST_CASE("sample draws the requested strata and hides verdicts in the facilitator file only") {
  auto pool = make_pool(20, 40, 3);
  const auto s = build_sample(pool.verdicts, pool.reports, 6, 6, 7);
  CHECK(s.items.size() == 12);
  CHECK(s.n_pos == 6);
  CHECK(s.n_neg == 6);
  const auto positives = std::count_if(s.items.begin(), s.items.end(), [](const SampleItem& i) { return i.hidden_model_verdict; });
  CHECK(positives == 6);
  const auto drawn = ids(s);
  const std::set<std::string> unique(drawn.begin(), drawn.end());
  CHECK(unique.size() == 12);
  for (const auto& it : s.items) {
    CHECK(it.item_id < "r0060");  // unscreenable reports r0060..r0062 never drawn
    CHECK(it.sections.size() == 6);
  }
}

TEST_CASE("property: sample is reproducible from its seed and independent of input order") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Gen g(seed);
    auto pool = make_pool(g.range(5, 30), g.range(5, 30), g.range(0, 3));
    const std::size_t np = static_cast<std::size_t>(g.range(1, 5)), nn = static_cast<std::size_t>(g.range(1, 5));
    const auto a = build_sample(pool.verdicts, pool.reports, np, nn, seed);
    g.shuffle(pool.verdicts);
    g.shuffle(pool.reports);
    const auto b = build_sample(pool.verdicts, pool.reports, np, nn, seed);
    CAPTURE(seed);
    CHECK(ids(a) == ids(b));
    CHECK(sample_to_json(a).dump() == sample_to_json(b).dump());
  }
  auto pool = make_pool(30, 30);
  CHECK(ids(build_sample(pool.verdicts, pool.reports, 10, 10, 1)) !=
        ids(build_sample(pool.verdicts, pool.reports, 10, 10, 2)));
}

TEST_CASE("sample reports the available counts when a stratum is too small") {
  auto pool = make_pool(3, 10, 5);
  try {
    build_sample(pool.verdicts, pool.reports, 4, 4, 1);
    FAIL("expected StatsError");
  } catch (const StatsError& e) {
    CHECK(std::string(e.what()).find("3 positives and 10 negatives available") != std::string::npos);
  }
}

TEST_CASE("sample file round-trips") {
  auto pool = make_pool(8, 8);
  const auto s = build_sample(pool.verdicts, pool.reports, 4, 4, 99);
  const auto dir = temp_dir("sample");
  save_sample(s, dir / "sample.json");
  const auto back = load_sample(dir / "sample.json");
  CHECK(sample_to_json(back).dump() == sample_to_json(s).dump());
  CHECK(back.seed == 99);
  pfd::atomic_write(dir / "bad.json", "{\"format\":\"something-else\"}");
  CHECK_THROWS_AS(load_sample(dir / "bad.json"), pfd::ParseError);
  fs::remove_all(dir);
}

TEST_CASE("blinding: no reviewer payload carries a model verdict") {
  auto pool = make_pool(12, 12);
  const auto s = build_sample(pool.verdicts, pool.reports, 6, 6, 3);
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    CHECK_FALSE(leaks_verdict(presentation_payload(s.items[i], i + 1, s.items.size())));
  }
  // The facilitator's file does carry it, which is what the scan looks for.
  CHECK(leaks_verdict(sample_to_json(s)));

  AdjudicationStore store(s, {"a", "b", "c"});
  for (const auto& r : {"a", "b", "c"}) {
    while (true) {
      const auto t = store.next_task(r);
      REQUIRE(t.status == 200);
      if (t.body.contains("done")) break;
      CHECK_FALSE(leaks_verdict(t.body));
      const bool split = std::string(r) == "c" && t.body.at("position").get<int>() <= 2;
      REQUIRE(store.submit_label({{"item_id", t.body.at("item_id")}, {"rater_id", r}, {"label", split ? 1 : 0}}).status == 201);
    }
  }
  const auto d = store.disagreements();
  REQUIRE(d.status == 200);
  CHECK(d.body.at("disagreements").size() == 2);
  for (const auto& entry : d.body.at("disagreements")) {
    auto copy = entry;
    copy.erase("labels");  // reviewer labels are 0/1 ints, not verdicts
    CHECK_FALSE(leaks_verdict(copy));
  }
}

TEST_CASE("labels CSV round-trips notes with commas and quotes") {
  std::vector<LabelRecord> labels = {{"r1", "a", 1, "age \"15\", per CAMHS"}, {"r1", "b", 0, ""}, {"r2", "a", 0, "line\nbreak"}};
  CHECK(parse_labels_csv(format_labels_csv(labels)) == labels);
  CHECK_THROWS_AS(parse_labels_csv("item_id,rater_id,label\nr1,a,2\n"), pfd::ParseError);
}

TEST_CASE("rating matrix rejects duplicate and foreign labels") {
  std::vector<LabelRecord> labels = {{"r1", "a", 1, ""}, {"r1", "b", 1, ""}};
  const auto m = RatingMatrix::from_labels(labels);
  CHECK(m.complete());
  CHECK(m.item_ids == std::vector<std::string>{"r1"});
  labels.push_back({"r1", "a", 0, ""});
  CHECK_THROWS_AS(RatingMatrix::from_labels(labels), StatsError);
  CHECK_THROWS_AS(RatingMatrix::from_labels({{"r9", "a", 1, ""}}, {"r1"}, {"a", "b"}), StatsError);
  CHECK_FALSE(RatingMatrix::from_labels({{"r1", "a", 1, ""}}, {"r1"}, {"a", "b"}).complete());
}

TEST_CASE("consensus adopts unanimous items and waits for resolutions") {
  std::vector<LabelRecord> labels;
  auto add = [&](const std::string& item, int a, int b, int c) {
    labels.push_back({item, "a", a, ""});
    labels.push_back({item, "b", b, ""});
    labels.push_back({item, "c", c, ""});
  };
  add("i1", 1, 1, 1);
  add("i2", 1, 0, 1);
  add("i3", 0, 0, 0);
  add("i4", 0, 1, 0);
  const auto m = RatingMatrix::from_labels(labels);
  auto c = Consensus::from_matrix(m);
  CHECK(c.disagreements().size() == 2);
  CHECK(c.unresolved() == std::vector<std::string>{"i2", "i4"});
  CHECK_THROWS_AS(c.final_labels(), IncompleteConsensusError);
  CHECK_THROWS_AS(c.resolve("i1", 1), StatsError);
  c.resolve("i2", 1);
  c.resolve("i4", 0);
  CHECK(c.complete());
  const auto f = c.final_labels();
  CHECK(f == std::map<std::string, int>{{"i1", 1}, {"i2", 1}, {"i3", 0}, {"i4", 0}});

  const auto back = Consensus::from_json(c.to_json());
  CHECK(back.final_labels() == f);

  const auto majority = Consensus::from_matrix(m, true);
  CHECK(majority.complete());
  CHECK(majority.final_labels().at("i2") == 1);
}

TEST_CASE("majority mode still waits on ties") {
  std::vector<LabelRecord> labels = {{"i1", "a", 1, ""}, {"i1", "b", 1, ""}, {"i1", "c", 0, ""}, {"i1", "d", 0, ""}};
  const auto c = Consensus::from_matrix(RatingMatrix::from_labels(labels), true);
  CHECK(c.unresolved() == std::vector<std::string>{"i1"});
}

TEST_CASE("validate_pipeline builds the confusion matrix and rejects unaligned ids") {
  std::map<std::string, bool> model = {{"a", true}, {"b", true}, {"c", false}, {"d", false}, {"e", true}};
  std::map<std::string, int> truth = {{"a", 1}, {"b", 0}, {"c", 0}, {"d", 1}, {"e", 1}};
  const auto v = validate_pipeline(model, truth);
  CHECK(v.confusion == ConfusionMatrix{2, 1, 1, 1});
  CHECK(v.agreement.n_items == 5);
  truth.erase("e");
  truth["z"] = 1;
  try {
    validate_pipeline(model, truth);
    FAIL("expected StatsError");
  } catch (const StatsError& e) {
    CHECK(std::string(e.what()).find("e (model only), z (consensus only)") != std::string::npos);
  }
}

TEST_CASE("adjudication store enforces raters, items and immutability") {
  auto pool = make_pool(4, 4);
  const auto s = build_sample(pool.verdicts, pool.reports, 2, 2, 1);
  AdjudicationStore store(s, {"a", "b"});
  const std::string item = s.items[0].item_id;
  CHECK(store.next_task("zed").status == 403);
  CHECK(store.submit_label({{"item_id", item}, {"rater_id", "a"}}).status == 400);
  CHECK(store.submit_label({{"item_id", item}, {"rater_id", "a"}, {"label", 3}}).status == 400);
  CHECK(store.submit_label({{"item_id", item}, {"rater_id", "zed"}, {"label", 1}}).status == 403);
  CHECK(store.submit_label({{"item_id", "nope"}, {"rater_id", "a"}, {"label", 1}}).status == 404);
  CHECK(store.submit_label({{"item_id", item}, {"rater_id", "a"}, {"label", true}}).status == 201);
  CHECK(store.submit_label({{"item_id", item}, {"rater_id", "a"}, {"label", 0}}).status == 409);
  CHECK(store.next_task("a").body.at("item_id") == s.items[1].item_id);
  CHECK(store.disagreements().status == 409);
  CHECK(store.stats().status == 409);
  CHECK(store.submit_resolution({{"item_id", item}, {"label", 1}}).status == 409);
  CHECK(store.progress().body.at("raters").at("a") == 1);
  CHECK_THROWS_AS(AdjudicationStore(s, {"a"}), StatsError);
  CHECK_THROWS_AS(AdjudicationStore(s, {"a", "a"}), StatsError);
}

TEST_CASE("adjudication store persists labels and resolutions across restarts") {
  auto pool = make_pool(4, 4);
  const auto s = build_sample(pool.verdicts, pool.reports, 2, 2, 1);
  const auto dir = temp_dir("store");
  {
    AdjudicationStore store(s, {"a", "b"}, dir);
    for (const auto& it : s.items) {
      store.submit_label({{"item_id", it.item_id}, {"rater_id", "a"}, {"label", 1}});
      store.submit_label({{"item_id", it.item_id}, {"rater_id", "b"}, {"label", it.item_id == s.items[0].item_id ? 0 : 1}});
    }
    CHECK(store.submit_resolution({{"item_id", s.items[0].item_id}, {"label", 0}}).status == 200);
  }
  AdjudicationStore again(s, {"a", "b"}, dir);
  CHECK(again.labels().size() == 8);
  const auto st = again.stats();
  REQUIRE(st.status == 200);
  CHECK(st.body.contains("model_vs_consensus"));
  CHECK(st.body.at("confusion").at("tp").get<int>() + st.body.at("confusion").at("fp").get<int>() == 2);
  fs::remove_all(dir);
}
