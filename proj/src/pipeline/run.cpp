#include "pfd/pipeline/run.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include "pfd/code/coder.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/log.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/extract.hpp"
#include "pfd/corpus/store.hpp"
#include "pfd/pipeline/fixture.hpp"
#include "pfd/screen/screener.hpp"
#include "pfd/validation/sample.hpp"

namespace pfd::pipeline {

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"scrape", "screen", "code", "tabulate", "sample"};
  return names;
}

std::string utc_now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "pfd-run-manifest";
  j["schema_versions"] = {{"manifest", kManifestSchemaVersion}, {"corpus", corpus::kCorpusSchemaVersion}};
  j["status"] = status;
  if (!failed_stage.empty()) j["failed_stage"] = failed_stage;
  if (!error.empty()) j["error"] = error;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["fixture"] = fixture;
  j["model_name"] = model_name;
  j["corpus_size"] = corpus_size;
  auto stages_json = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["status"] = s.status;
    sj["wall_seconds"] = s.wall_seconds;
    sj["counts"] = s.counts;
    if (!s.error.empty()) sj["error"] = s.error;
    stages_json.push_back(sj);
  }
  j["stages"] = stages_json;
  j["total_wall_seconds"] = total_wall_seconds;
  j["cache_hit_rate"] = cache_hit_rate;
  j["usage"] = {{"prompt_tokens", usage.prompt_tokens}, {"completion_tokens", usage.completion_tokens}};
  j["config"] = config;
  return j;
}

RunPaths run_paths(const PipelineConfig& config) {
  RunPaths p;
  p.out_dir = config.run.out_dir;
  p.corpus = p.out_dir / "corpus.jsonl";
  p.scrape_log = p.out_dir / "scrape_log.txt";
  p.screen = p.out_dir / "screen.csv";
  p.codes = p.out_dir / "codes.csv";
  p.tables_md = p.out_dir / "tables.md";
  p.tables_csv = p.out_dir / "tables.csv";
  p.sample = p.out_dir / "sample.json";
  p.manifest = p.out_dir / "manifest.json";
  p.state = p.out_dir / "state.json";
  p.fetch_cache = p.out_dir / "cache" / "fetch";
  p.llm_cache = config.llm_cache_dir.value_or(p.out_dir / "cache" / "llm");
  p.crawl_checkpoint = p.out_dir / "cache" / "crawl_checkpoint.json";
  return p;
}

std::unique_ptr<corpus::HttpFetcher> make_fetcher(const PipelineConfig& config,
                                                  const std::optional<std::filesystem::path>& fixture) {
  if (fixture) return std::make_unique<corpus::ArchiveFetcher>(fixture_paths(*fixture).archive);
  corpus::Politeness pol;
  pol.requests_per_second = config.scrape.requests_per_second;
  return std::make_unique<corpus::LiveFetcher>(pol);
}

std::shared_ptr<llm::Gateway> make_gateway(const PipelineConfig& config,
                                           const std::optional<std::filesystem::path>& fixture) {
  std::shared_ptr<llm::Transport> transport;
  if (fixture) {
    transport = load_scripted_transport(fixture_paths(*fixture).gateway);
  } else {
    transport = std::make_shared<llm::HttpTransport>();
  }
  return std::make_shared<llm::Gateway>(config.model, transport, run_paths(config).llm_cache);
}

namespace {

class StageFailed : public Error {
 public:
  using Error::Error;
};

std::set<std::string> read_state(const RunPaths& p) {
  std::set<std::string> done;
  if (!std::filesystem::exists(p.state)) return done;
  try {
    const auto state = nlohmann::json::parse(read_text_file(p.state));
    for (const auto& s : state.at("completed")) done.insert(s.get<std::string>());
  } catch (const std::exception& e) {
    logger()->warn("ignoring unreadable run state {}: {}", p.state.string(), e.what());
    done.clear();
  }
  return done;
}

void write_state(const RunPaths& p, const std::vector<std::string>& completed) {
  atomic_write(p.state, nlohmann::json{{"completed", completed}}.dump(2) + "\n");
}

std::vector<std::filesystem::path> stage_outputs(const RunPaths& p, const std::string& stage) {
  if (stage == "scrape") return {p.corpus};
  if (stage == "screen") return {p.screen};
  if (stage == "code") return {p.codes};
  if (stage == "tabulate") return {p.tables_md, p.tables_csv};
  return {p.sample};
}

struct Context {
  const PipelineConfig& config;
  const RunOptions& options;
  RunPaths paths;
  std::shared_ptr<llm::Gateway> gateway;
  std::optional<std::vector<corpus::ReportRecord>> corpus;

  llm::Gateway& llm() {
    if (!gateway) gateway = make_gateway(config, options.fixture);
    return *gateway;
  }
  const std::vector<corpus::ReportRecord>& records() {
    if (!corpus) corpus = corpus::load_corpus(paths.corpus);
    return *corpus;
  }
};

void run_scrape(Context& ctx, StageRecord& rec) {
  auto fetcher = make_fetcher(ctx.config, ctx.options.fixture);
  corpus::FetchCache cache(ctx.paths.fetch_cache);
  corpus::ScrapeOptions opt;
  opt.base_url = ctx.config.scrape.base_url;
  opt.window = DateRange{ctx.config.scrape.from, ctx.config.scrape.to};
  opt.workers = ctx.config.run.workers;
  opt.crawl.checkpoint_path = ctx.paths.crawl_checkpoint;
  opt.crawl.checkpoint_every = ctx.config.scrape.checkpoint_every;
  opt.crawl.max_retries = ctx.config.scrape.max_retries;
  opt.retry.max_retries = ctx.config.scrape.max_retries;
  opt.extract.dpi = ctx.config.scrape.dpi;
  opt.extract.scanned_chars_per_page = ctx.config.scrape.scanned_chars_per_page;
  if (ctx.options.fixture) {
    opt.crawl.retry_backoff = std::chrono::milliseconds(0);
    opt.retry.backoff = std::chrono::milliseconds(0);
  }
  auto result = corpus::scrape(*fetcher, cache, ctx.llm(), opt);
  corpus::store_corpus(result.records, ctx.paths.corpus);
  atomic_write(ctx.paths.scrape_log, join(result.log, "\n") + (result.log.empty() ? "" : "\n"));
  rec.counts["refs_found"] = result.summary.refs_found;
  rec.counts["records"] = result.summary.records;
  rec.counts["fetch_failures"] = result.summary.fetch_failures;
  rec.counts["duplicates"] = result.summary.duplicates;
  rec.counts["out_of_window"] = result.summary.out_of_window;
  rec.counts["extraction_incomplete"] = result.summary.incomplete;
  ctx.corpus = std::move(result.records);
}

void run_screen(Context& ctx, StageRecord& rec) {
  auto q = screen::load_question(ctx.config.screen.question);
  q.include_evidence = ctx.config.screen.evidence;
  auto run = screen::screen_corpus(ctx.records(), q, ctx.llm(), ctx.config.run.workers);
  atomic_write(ctx.paths.screen, screen::format_verdicts_csv(run.verdicts));
  rec.counts["positives"] = run.summary.positives;
  rec.counts["negatives"] = run.summary.negatives;
  rec.counts["unscreenable"] = run.summary.unscreenable;
  rec.counts["skipped_incomplete"] = run.skipped_incomplete;
  const double frac = run.summary.unscreenable_fraction();
  if (frac > ctx.config.screen.unscreenable_ceiling) {
    throw StageFailed(fmt::format("unscreenable fraction {:.3f} exceeds ceiling {:.3f}", frac,
                                  ctx.config.screen.unscreenable_ceiling));
  }
}

void run_code(Context& ctx, StageRecord& rec) {
  const auto frame = code::load_frame(ctx.config.code.frame);
  const auto verdicts = screen::parse_verdicts_csv(read_text_file(ctx.paths.screen));
  std::set<std::string> positive;
  for (const auto& v : verdicts) {
    if (v.verdict && *v.verdict) positive.insert(v.report_id);
  }
  std::vector<const corpus::ReportRecord*> selected;
  for (const auto& r : ctx.records()) {
    if (positive.count(r.id)) selected.push_back(&r);
  }
  if (selected.size() != positive.size()) {
    throw StageFailed("screen output names reports that are not in the corpus");
  }
  const auto outcomes = code::code_reports(selected, frame, ctx.llm(), ctx.config.code.evidence, ctx.config.run.workers);
  atomic_write(ctx.paths.codes, code::format_codes_csv(outcomes, frame));
  std::size_t coded = 0;
  std::size_t warnings = 0;
  for (const auto& o : outcomes) {
    coded += o.coded ? 1 : 0;
    warnings += o.warnings.size();
  }
  rec.counts["coded"] = coded;
  rec.counts["uncoded"] = outcomes.size() - coded;
  rec.counts["warnings"] = warnings;
  const double frac = outcomes.empty() ? 0.0 : static_cast<double>(outcomes.size() - coded) / outcomes.size();
  if (frac > ctx.config.code.uncoded_ceiling) {
    throw StageFailed(fmt::format("uncoded fraction {:.3f} exceeds ceiling {:.3f}", frac, ctx.config.code.uncoded_ceiling));
  }
}

void run_tabulate(Context& ctx, StageRecord& rec) {
  const auto frame = code::load_frame(ctx.config.code.frame);
  const auto outcomes = code::parse_codes_csv(read_text_file(ctx.paths.codes), frame);
  std::vector<code::CodeVector> coded;
  std::size_t uncoded = 0;
  for (const auto& o : outcomes) {
    if (o.coded) {
      coded.push_back(o.codes);
    } else {
      ++uncoded;
    }
  }
  const auto table = code::tabulate(coded, frame, uncoded);
  atomic_write(ctx.paths.tables_md, code::render_tables_markdown(table, frame));
  atomic_write(ctx.paths.tables_csv, code::render_tables_csv(table, frame));
  rec.counts["n_reports"] = table.n_reports;
  rec.counts["n_uncoded"] = table.n_uncoded;
}

void run_sample(Context& ctx, StageRecord& rec) {
  const auto verdicts = screen::parse_verdicts_csv(read_text_file(ctx.paths.screen));
  const auto s = validation::build_sample(verdicts, ctx.records(), ctx.config.sample.n_pos, ctx.config.sample.n_neg,
                                          ctx.config.sample.seed);
  validation::save_sample(s, ctx.paths.sample);
  rec.counts["items"] = s.items.size();
  rec.counts["seed"] = s.seed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RunOutcome run_all(const PipelineConfig& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  RunManifest& m = out.manifest;
  m.config = config.to_json();
  m.model_name = config.model.model_name;
  m.fixture = options.fixture.has_value();
  m.started_at = utc_now_iso();

  Context ctx{config, options, run_paths(config), nullptr, std::nullopt};
  std::filesystem::create_directories(ctx.paths.out_dir);

  const auto& names = stage_names();
  if (options.stop_after &&
      std::find(names.begin(), names.end(), *options.stop_after) == names.end()) {
    throw ConfigError("unknown stage '" + *options.stop_after + "'; expected one of " + join(names, ", "));
  }

  if (options.fresh) {
    std::error_code ec;
    std::filesystem::remove(ctx.paths.state, ec);
    for (const auto& s : names) {
      for (const auto& f : stage_outputs(ctx.paths, s)) std::filesystem::remove(f, ec);
    }
    std::filesystem::remove(ctx.paths.crawl_checkpoint, ec);
  }
  const std::set<std::string> already = read_state(ctx.paths);
  std::vector<std::string> completed;

  bool stop = false;
  for (const auto& name : names) {
    StageRecord rec{name, "not_run", 0, nlohmann::ordered_json::object(), ""};
    if (stop) {
      m.stages.push_back(rec);
      continue;
    }
    const auto outputs = stage_outputs(ctx.paths, name);
    const bool reusable = already.count(name) &&
                          std::all_of(outputs.begin(), outputs.end(), [](const auto& f) { return std::filesystem::exists(f); });
    const auto ts = std::chrono::steady_clock::now();
    if (reusable) {
      rec.status = "resumed";
      completed.push_back(name);
    } else {
      try {
        if (name == "scrape") run_scrape(ctx, rec);
        else if (name == "screen") run_screen(ctx, rec);
        else if (name == "code") run_code(ctx, rec);
        else if (name == "tabulate") run_tabulate(ctx, rec);
        else run_sample(ctx, rec);
        rec.status = "completed";
        completed.push_back(name);
        write_state(ctx.paths, completed);
      } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
        m.status = "failed";
        m.failed_stage = name;
        m.error = e.what();
        logger()->error("stage {} failed: {}", name, e.what());
        stop = true;
      }
    }
    rec.wall_seconds = seconds_since(ts);
    m.stages.push_back(rec);
    if (!stop && options.stop_after && *options.stop_after == name) {
      stop = true;
      m.status = "stopped";
    }
  }
  if (m.status == "running") m.status = "completed";

  try {
    if (std::filesystem::exists(ctx.paths.corpus)) m.corpus_size = ctx.records().size();
  } catch (const std::exception& e) {
    logger()->warn("cannot count corpus: {}", e.what());
  }
  if (ctx.gateway) {
    const auto st = ctx.gateway->stats();
    m.cache_hit_rate = st.cache_hit_rate();
    m.usage = st.usage;
  }
  m.finished_at = utc_now_iso();
  m.total_wall_seconds = seconds_since(t0);
  atomic_write(ctx.paths.manifest, m.to_json().dump(2) + "\n");
  out.exit_code = m.status == "failed" ? 1 : 0;
  return out;
}

}  // namespace pfd::pipeline
