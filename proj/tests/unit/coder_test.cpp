#include <doctest.h>
#include <yaml-cpp/yaml.h>

#include <set>

#include "gen.hpp"
#include "pfd/code/coder.hpp"
#include "pfd/code/frame.hpp"
#include "pfd/common/csv.hpp"
#include "pfd/common/fs.hpp"
#include "records.hpp"

using namespace pfd::code;
using pfd::testing::Gen;
using nlohmann::json;

namespace {

const CodingFrame& shipped() {
  static const CodingFrame f = load_frame(PFD_FRAME);
  return f;
}

CodingFrame small_frame() {
  return parse_frame(R"(name: tiny
addressee_categories:
  - {id: nhs, label: NHS, definition: NHS bodies}
  - {id: other, label: Other, definition: Everything else}
themes:
  - id: t1
    label: Theme one
    sub_themes:
      - {id: s1, label: Sub one, definition: First}
      - {id: s2, label: Sub two, definition: Second}
  - id: t2
    label: Theme two
    sub_themes:
      - {id: s3, label: Sub three, definition: Third}
)");
}

CodeVector random_vector(Gen& g, const CodingFrame& f, const std::string& id) {
  CodeVector v;
  v.report_id = id;
  v.frame_fingerprint = f.fingerprint();
  for (std::size_t i = 0; i < f.addressees.size(); ++i) v.addressee_flags.push_back(g.coin(0.4));
  for (std::size_t i = 0; i < f.sub_theme_count(); ++i) v.sub_theme_flags.push_back(g.coin(0.2));
  return v;
}

pfd::llm::ModelConfig model_config() {
  pfd::llm::ModelConfig c;
  c.endpoint_url = "https://code-model.test/v1/chat/completions";
  c.model_name = "fixture";
  c.max_retries = 1;
  c.backoff = std::chrono::milliseconds(0);
  c.api_key_env = "";
  return c;
}

std::shared_ptr<pfd::llm::ScriptedTransport> always(const std::string& content) {
  return std::make_shared<pfd::llm::ScriptedTransport>(
      [content](const json&) { return pfd::llm::ok_response(content); });
}

}  // namespace

TEST_CASE("the shipped frame has 5 addressee categories and 23 sub-themes") {
  const auto& f = shipped();
  CHECK(f.addressees.size() == 5);
  CHECK(f.sub_theme_count() == 23);
  CHECK(f.cardinality() == 28);
  CHECK_NOTHROW(f.validate());
  std::set<std::string> ids;
  for (const auto& a : f.addressees) ids.insert(a.id);
  for (const auto* s : f.sub_themes()) ids.insert(s->id);
  CHECK(ids.size() == 28);
  const auto schema = coding_schema(f, false);
  CHECK(schema.fields().size() == 28);
  CHECK(coding_schema(f, true).fields().size() == 29);
  const auto prompt = coding_system_prompt(f, false);
  for (const auto* s : f.sub_themes()) CHECK(prompt.find(s->definition.substr(0, 20)) != std::string::npos);
}

TEST_CASE("frame fingerprint tracks ids and order") {
  auto a = small_frame();
  auto b = small_frame();
  CHECK(a.fingerprint() == b.fingerprint());
  b.themes[0].sub_themes[0].definition = "Reworded";
  CHECK(a.fingerprint() == b.fingerprint());
  std::swap(b.themes[0].sub_themes[0], b.themes[0].sub_themes[1]);
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("frame validation names the offending entry") {
  auto f = small_frame();
  f.themes[1].sub_themes[0].id = "s1";
  CHECK_THROWS_WITH_AS(f.validate(), doctest::Contains("s1"), FrameError);
  f = small_frame();
  f.addressees[0].label = "  ";
  CHECK_THROWS_WITH_AS(f.validate(), doctest::Contains("nhs"), FrameError);
  f = small_frame();
  f.themes[0].sub_themes.clear();
  CHECK_THROWS_WITH_AS(f.validate(), doctest::Contains("t1"), FrameError);
  f = small_frame();
  f.addressees.clear();
  CHECK_THROWS_AS(f.validate(), FrameError);
  CHECK_THROWS_AS(parse_frame("- just\n- a list\n"), FrameError);
  CHECK_THROWS_AS(parse_frame("name: x\nthemes: [\n"), FrameError);
  CHECK_THROWS_AS(load_frame("/nonexistent/frame.yaml"), pfd::IoError);
}

TEST_CASE("property: mutated frames are either valid or rejected with FrameError") {
  Gen g(2024);
  const YAML::Node original = YAML::LoadFile(PFD_FRAME);
  std::size_t rejected = 0;
  for (int i = 0; i < 300; ++i) {
    YAML::Node root = YAML::Clone(original);
    YAML::Node addr = root["addressee_categories"];
    YAML::Node themes = root["themes"];
    YAML::Node theme = themes[static_cast<std::size_t>(g.range(0, static_cast<int>(themes.size()) - 1))];
    YAML::Node subs = theme["sub_themes"];
    YAML::Node sub = subs[static_cast<std::size_t>(g.range(0, static_cast<int>(subs.size()) - 1))];
    bool breaks = true;
    switch (g.range(0, 8)) {
      case 0: sub["id"] = addr[0]["id"].as<std::string>(); break;
      case 1: sub["label"] = ""; break;
      case 2: sub.remove("definition"); break;
      case 3: theme["sub_themes"] = YAML::Node(YAML::NodeType::Sequence); break;
      case 4: root.remove("addressee_categories"); break;
      case 5: addr[1]["id"] = "   "; break;
      case 6: theme["id"] = themes[0]["sub_themes"][0]["id"].as<std::string>(); break;
      case 7: sub["label"] = "Relabelled " + g.word(); breaks = false; break;
      default: sub["interpretive"] = !sub["interpretive"].as<bool>(false); breaks = false; break;
    }
    YAML::Emitter out;
    out << root;
    try {
      const auto f = parse_frame(out.c_str());
      CHECK_FALSE(breaks);
      CHECK(f.cardinality() == 28);
    } catch (const FrameError&) {
      CHECK(breaks);
      ++rejected;
    }
  }
  CHECK(rejected > 150);
}

TEST_CASE("coding a report reads every flag and verifies evidence") {
  const auto f = small_frame();
  const auto r = pfd::testing::make_record("r1", "", "The school was not told about the overdose.");
  json reply = {{"nhs", true}, {"other", false}, {"s1", false}, {"s2", true}, {"s3", false},
                {"evidence", {"s2: school was not told", "s3: invented text", "zz: school", "no colon"}}};
  pfd::llm::Gateway gw(model_config(), always(reply.dump()));
  const auto o = code_report(r, f, gw, true);
  REQUIRE(o.coded);
  CHECK(o.codes.addressee_flags == std::vector<bool>{true, false});
  CHECK(o.codes.sub_theme_flags == std::vector<bool>{false, true, false});
  CHECK(o.codes.evidence.size() == 1);
  CHECK(o.codes.evidence.at("s2") == std::vector<std::string>{"school was not told"});
  CHECK(o.warnings.size() == 3);

  json none = {{"nhs", false}, {"other", false}, {"s1", false}, {"s2", false}, {"s3", false}};
  pfd::llm::Gateway gw2(model_config(), always(none.dump()));
  const auto empty = code_report(r, f, gw2);
  CHECK(empty.coded);
  CHECK(empty.warnings.size() == 2);

  pfd::llm::Gateway bad(model_config(), always("{\"nhs\": true}"));
  const auto failed = code_report(r, f, bad);
  CHECK_FALSE(failed.coded);
  CHECK(failed.attempts == 2);
  CHECK(failed.codes.sub_theme_flags.empty());
}

TEST_CASE("tabulation counts reports, not mentions") {
  const auto f = small_frame();
  Gen g(1);
  auto v = random_vector(g, f, "a");
  v.sub_theme_flags = {true, true, false};
  v.evidence["s1"] = {"one", "two", "three"};
  const auto t = tabulate({v, v}, f, 4);
  CHECK(t.sub_theme_counts == std::vector<std::size_t>{2, 2, 0});
  CHECK(t.n_reports == 2);
  CHECK(t.n_uncoded == 4);

  auto foreign = v;
  foreign.frame_fingerprint = "other";
  CHECK_THROWS_AS(tabulate({v, foreign}, f), FrameError);
  auto tf = t;
  tf.frame_fingerprint = "other";
  CHECK_THROWS_AS(t + tf, FrameError);
}

TEST_CASE("property: tabulation matches a brute-force count and is additive") {
  const auto& f = shipped();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Gen g(seed);
    std::vector<CodeVector> a, b;
    for (int i = 0, n = g.range(0, 30); i < n; ++i) a.push_back(random_vector(g, f, "a" + std::to_string(i)));
    for (int i = 0, n = g.range(0, 30); i < n; ++i) b.push_back(random_vector(g, f, "b" + std::to_string(i)));
    const std::size_t ua = static_cast<std::size_t>(g.range(0, 3)), ub = static_cast<std::size_t>(g.range(0, 3));
    auto all = a;
    all.insert(all.end(), b.begin(), b.end());
    const auto whole = tabulate(all, f, ua + ub);
    CHECK(whole == tabulate(a, f, ua) + tabulate(b, f, ub));

    for (std::size_t k = 0; k < f.sub_theme_count(); ++k) {
      std::size_t n = 0;
      for (const auto& v : all) n += v.sub_theme_flags[k] ? 1 : 0;
      CHECK(whole.sub_theme_counts[k] == n);
      CHECK(whole.sub_theme_counts[k] <= whole.n_reports);
    }
    for (std::size_t k = 0; k < f.addressees.size(); ++k) {
      std::size_t n = 0;
      for (const auto& v : all) n += v.addressee_flags[k] ? 1 : 0;
      CHECK(whole.addressee_counts[k] == n);
    }
    auto shuffled = all;
    g.shuffle(shuffled);
    CHECK(tabulate(shuffled, f, ua + ub) == whole);
  }
}

TEST_CASE("property: codes CSV round-trips") {
  const auto f = small_frame();
  Gen g(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<CodeOutcome> outs;
    for (int k = 0, n = g.range(0, 8); k < n; ++k) {
      CodeOutcome o;
      o.coded = g.coin(0.85);
      o.codes = random_vector(g, f, "r" + std::to_string(k));
      if (!o.coded) {
        o.codes.addressee_flags.clear();
        o.codes.sub_theme_flags.clear();
      } else if (g.coin()) {
        o.codes.evidence["s" + std::to_string(g.range(1, 3))] = {g.sentence(1, 4) + " | a\\b, \"q\""};
      }
      outs.push_back(o);
    }
    const auto back = parse_codes_csv(format_codes_csv(outs, f), f);
    REQUIRE(back.size() == outs.size());
    for (std::size_t k = 0; k < outs.size(); ++k) {
      CHECK(back[k].coded == outs[k].coded);
      CHECK(back[k].codes == outs[k].codes);
    }
  }
  CHECK_THROWS_AS(parse_codes_csv(format_codes_csv({}, f), shipped()), FrameError);
}

TEST_CASE("published-layout tables") {
  const auto f = small_frame();
  TabulationResult t;
  t.frame_fingerprint = f.fingerprint();
  t.addressee_counts = {7, 2};
  t.sub_theme_counts = {3, 0, 5};
  t.n_reports = 9;
  t.n_uncoded = 1;
  const auto md = render_tables_markdown(t, f);
  CHECK(md.find("| NHS | 7 |") != std::string::npos);
  CHECK(md.find("| **Theme two** | |") != std::string::npos);
  CHECK(md.find("| Sub three | 5 |") != std::string::npos);
  CHECK(md.find("n = 9 reports") != std::string::npos);
  CHECK(md.find("excluded from n): 1") != std::string::npos);
  CHECK(md.find("| Sub one | 3 |") < md.find("| Sub two | 0 |"));

  const pfd::csv::Table csv(pfd::csv::parse(render_tables_csv(t, f)));
  CHECK(csv.header() == pfd::csv::Row{"table", "theme", "id", "label", "count"});
  CHECK(csv.at(4, "id") == "s3");
  CHECK(csv.at(4, "theme") == "Theme two");
  CHECK(csv.at(4, "count") == "5");
  t.frame_fingerprint = "x";
  CHECK_THROWS_AS(render_tables_markdown(t, f), FrameError);
}
