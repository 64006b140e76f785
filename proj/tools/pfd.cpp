// pfd: command-line front end for the report pipeline.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <set>

#include "pfd/code/coder.hpp"
#include "pfd/common/csv.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/log.hpp"
#include "pfd/common/text.hpp"
#include "pfd/corpus/extract.hpp"
#include "pfd/corpus/store.hpp"
#include "pfd/pipeline/config.hpp"
#include "pfd/pipeline/fixture.hpp"
#include "pfd/pipeline/run.hpp"
#include "pfd/screen/screener.hpp"
#include "pfd/validation/adjudication.hpp"
#include "pfd/validation/consensus.hpp"
#include "pfd/validation/sample.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pfd;

namespace {

struct Globals {
  bool json = false;
  bool verbose = false;
  std::string config;
  std::string fixture;
};

// Config precedence: --config, else the fixture's config.yaml, else defaults.
pipeline::PipelineConfig resolve_config(const Globals& g) {
  if (!g.config.empty()) return pipeline::load_config(g.config);
  if (!g.fixture.empty()) {
    const auto p = pipeline::fixture_paths(g.fixture).config;
    if (fs::exists(p)) return pipeline::load_config(p);
  }
  return pipeline::parse_config("", fs::current_path());
}

// Stepwise commands keep their fetch and model caches beside the file they write.
pipeline::PipelineConfig stepwise_config(const Globals& g, const std::string& out) {
  auto cfg = resolve_config(g);
  cfg.run.out_dir = fs::absolute(out).parent_path();
  return cfg;
}

std::optional<fs::path> fixture_of(const Globals& g) {
  if (g.fixture.empty()) return std::nullopt;
  return fs::path(g.fixture);
}

void emit(const Globals& g, const ordered_json& j, const std::string& text) {
  if (g.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}


validation::AdjudicationServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-table pipeline for coroners' Prevention of Future Deaths reports"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable output on stdout");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.add_option("--config", g.config, "Pipeline config (YAML)");
  app.add_option("--fixture", g.fixture, "Fixture directory: recorded archive and scripted model");

  // scrape
  auto* scrape = app.add_subcommand("scrape", "Crawl, fetch and extract reports into a corpus file");
  std::string s_from, s_to, s_out, s_base;
  int s_workers = 0;
  scrape->add_option("--from", s_from, "First publication date (YYYY-MM-DD)");
  scrape->add_option("--to", s_to, "Last publication date (YYYY-MM-DD)");
  scrape->add_option("--out", s_out, "Corpus file to write")->required();
  scrape->add_option("--base-url", s_base, "Index URL to crawl");
  scrape->add_option("--workers", s_workers, "Parallel fetch/extract workers");

  // screen
  auto* screen_cmd = app.add_subcommand("screen", "Answer a yes/no question for every report");
  std::string sc_corpus, sc_question, sc_out;
  bool sc_evidence = false;
  int sc_workers = 0;
  double sc_ceiling = screen::kDefaultUnscreenableCeiling;
  screen_cmd->add_option("--corpus", sc_corpus)->required();
  screen_cmd->add_option("--question", sc_question, "Question file (YAML)")->required();
  screen_cmd->add_option("--out", sc_out, "Verdicts CSV")->required();
  screen_cmd->add_flag("--evidence", sc_evidence, "Ask for verbatim supporting passages");
  screen_cmd->add_option("--workers", sc_workers);
  screen_cmd->add_option("--ceiling", sc_ceiling, "Maximum unscreenable fraction before exiting nonzero");

  // code
  auto* code_cmd = app.add_subcommand("code", "Code screened-positive reports against a frame");
  std::string c_corpus, c_screened, c_frame, c_out;
  bool c_evidence = false;
  int c_workers = 0;
  code_cmd->add_option("--corpus", c_corpus)->required();
  code_cmd->add_option("--screened", c_screened, "Verdicts CSV from screen")->required();
  code_cmd->add_option("--frame", c_frame, "Coding frame (YAML)")->required();
  code_cmd->add_option("--out", c_out, "Codes CSV")->required();
  code_cmd->add_flag("--evidence", c_evidence);
  code_cmd->add_option("--workers", c_workers);

  // tabulate
  auto* tab = app.add_subcommand("tabulate", "Report-level counts per addressee and sub-theme");
  std::string t_codes, t_frame, t_out;
  tab->add_option("--codes", t_codes)->required();
  tab->add_option("--frame", t_frame)->required();
  tab->add_option("--out", t_out, "Output file; .csv for CSV, anything else Markdown")->required();

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Draw a blinded, balanced adjudication sample");
  std::string sa_screened, sa_corpus, sa_out;
  std::size_t sa_pos = 72, sa_neg = 72;
  std::uint64_t sa_seed = 7;
  sample_cmd->add_option("--screened", sa_screened)->required();
  sample_cmd->add_option("--corpus", sa_corpus)->required();
  sample_cmd->add_option("--n-pos", sa_pos);
  sample_cmd->add_option("--n-neg", sa_neg);
  sample_cmd->add_option("--seed", sa_seed);
  sample_cmd->add_option("--out", sa_out)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Host the adjudication API (and UI assets)");
  std::string sv_sample, sv_state, sv_static, sv_host = "127.0.0.1";
  std::vector<std::string> sv_raters;
  int sv_port = 8080;
  bool sv_majority = false;
  serve->add_option("--sample", sv_sample)->required();
  serve->add_option("--raters", sv_raters, "Rater ids")->required()->delimiter(',');
  serve->add_option("--state", sv_state, "Directory for labels and resolutions")->required();
  serve->add_option("--static", sv_static, "Directory of built UI assets");
  serve->add_option("--host", sv_host);
  serve->add_option("--port", sv_port);
  serve->add_flag("--majority", sv_majority, "Adopt strict-majority labels without discussion");

  // stats
  auto* stats = app.add_subcommand("stats", "Agreement statistics");
  bool st_cohen = false, st_fleiss = false, st_panel = false, st_validate = false;
  std::string st_labels, st_se = "null", st_sample, st_consensus;
  std::vector<std::string> st_raters;
  double st_kappa0 = 0.7, st_prev = 0.5;
  int st_n = 144, st_min_raters = 2, st_max_raters = 5;
  stats->add_flag("--cohen", st_cohen, "Cohen's kappa between two raters in --labels");
  stats->add_flag("--fleiss", st_fleiss, "Fleiss' kappa over all raters in --labels");
  stats->add_flag("--panel", st_panel, "Expected kappa lower bound by panel size");
  stats->add_flag("--validate", st_validate, "Model verdicts (--sample) against consensus (--consensus)");
  stats->add_option("--labels", st_labels, "Labels CSV (item_id, rater_id, label)");
  stats->add_option("--raters", st_raters, "Raters to compare (Cohen: exactly two)")->delimiter(',');
  stats->add_option("--se", st_se, "Standard error for the CI: null or nonnull")->check(CLI::IsMember({"null", "nonnull"}));
  stats->add_option("--kappa0", st_kappa0);
  stats->add_option("--n", st_n, "Subjects");
  stats->add_option("--prevalence", st_prev);
  stats->add_option("--min-raters", st_min_raters);
  stats->add_option("--max-raters", st_max_raters);
  stats->add_option("--sample", st_sample, "Sample file holding model verdicts");
  stats->add_option("--consensus", st_consensus, "Consensus file");

  // consensus
  auto* cons = app.add_subcommand("consensus", "Find disagreements and apply resolutions");
  std::string co_labels, co_resolve, co_out, co_final;
  bool co_majority = false;
  cons->add_option("--labels", co_labels)->required();
  cons->add_option("--resolve", co_resolve, "CSV of item_id,label resolutions");
  cons->add_option("--out", co_out, "Consensus state file (JSON)");
  cons->add_option("--final", co_final, "Write final labels CSV when complete");
  cons->add_flag("--majority", co_majority);

  // run-all
  auto* run = app.add_subcommand("run-all", "scrape, screen, code, tabulate and sample in order");
  bool r_fresh = false;
  std::string r_stop;
  run->add_flag("--fresh", r_fresh, "Ignore checkpoints and re-run every stage");
  run->add_option("--stop-after", r_stop, "Last stage to run");
  std::string r_out;
  run->add_option("--out-dir", r_out, "Override run.out_dir from the config");

  CLI11_PARSE(app, argc, argv);
  logger()->set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*scrape) {
      auto cfg = stepwise_config(g, s_out);
      if (!s_from.empty()) {
        auto d = parse_date(s_from);
        if (!d) throw ConfigError("--from: cannot parse date '" + s_from + "'");
        cfg.scrape.from = *d;
      }
      if (!s_to.empty()) {
        auto d = parse_date(s_to);
        if (!d) throw ConfigError("--to: cannot parse date '" + s_to + "'");
        cfg.scrape.to = *d;
      }
      if (!s_base.empty()) cfg.scrape.base_url = s_base;
      if (s_workers > 0) cfg.run.workers = s_workers;
      cfg.validate();
      const auto paths = pipeline::run_paths(cfg);
      auto fetcher = pipeline::make_fetcher(cfg, fixture_of(g));
      auto gateway = pipeline::make_gateway(cfg, fixture_of(g));
      corpus::FetchCache cache(paths.fetch_cache);
      corpus::ScrapeOptions opt;
      opt.base_url = cfg.scrape.base_url;
      opt.window = {cfg.scrape.from, cfg.scrape.to};
      opt.workers = cfg.run.workers;
      opt.crawl.checkpoint_path = paths.crawl_checkpoint;
      opt.crawl.checkpoint_every = cfg.scrape.checkpoint_every;
      opt.extract.dpi = cfg.scrape.dpi;
      opt.extract.scanned_chars_per_page = cfg.scrape.scanned_chars_per_page;
      const auto result = corpus::scrape(*fetcher, cache, *gateway, opt);
      corpus::store_corpus(result.records, s_out);
      ordered_json j{{"records", result.summary.records},
                     {"refs_found", result.summary.refs_found},
                     {"fetch_failures", result.summary.fetch_failures},
                     {"duplicates", result.summary.duplicates},
                     {"out_of_window", result.summary.out_of_window},
                     {"extraction_incomplete", result.summary.incomplete},
                     {"log", result.log}};
      emit(g, j, fmt::format("{} reports written to {} ({} links, {} duplicates, {} out of window, {} fetch failures)\n",
                             result.summary.records, s_out, result.summary.refs_found, result.summary.duplicates,
                             result.summary.out_of_window, result.summary.fetch_failures));
      return 0;
    }

    if (*screen_cmd) {
      auto cfg = stepwise_config(g, sc_out);
      auto gateway = pipeline::make_gateway(cfg, fixture_of(g));
      auto q = screen::load_question(sc_question);
      if (sc_evidence || cfg.screen.evidence) q.include_evidence = true;
      if (screen_cmd->count("--ceiling") == 0) sc_ceiling = cfg.screen.unscreenable_ceiling;
      const auto records = corpus::load_corpus(sc_corpus);
      const auto r = screen::screen_corpus(records, q, *gateway, sc_workers > 0 ? sc_workers : cfg.run.workers);
      atomic_write(sc_out, screen::format_verdicts_csv(r.verdicts));
      const bool over = r.summary.unscreenable_fraction() > sc_ceiling;
      ordered_json j{{"positives", r.summary.positives},
                     {"negatives", r.summary.negatives},
                     {"unscreenable", r.summary.unscreenable},
                     {"skipped_incomplete", r.skipped_incomplete},
                     {"ceiling_exceeded", over}};
      emit(g, j, fmt::format("positives {}, negatives {}, unscreenable {} (skipped {} incomplete records)\n",
                             r.summary.positives, r.summary.negatives, r.summary.unscreenable, r.skipped_incomplete));
      return over ? 1 : 0;
    }

    if (*code_cmd) {
      auto cfg = stepwise_config(g, c_out);
      c_evidence = c_evidence || cfg.code.evidence;
      auto gateway = pipeline::make_gateway(cfg, fixture_of(g));
      const auto frame = code::load_frame(c_frame);
      const auto records = corpus::load_corpus(c_corpus);
      std::set<std::string> positive;
      for (const auto& v : screen::parse_verdicts_csv(read_text_file(c_screened))) {
        if (v.verdict && *v.verdict) positive.insert(v.report_id);
      }
      std::vector<const corpus::ReportRecord*> selected;
      for (const auto& r : records) {
        if (positive.count(r.id)) selected.push_back(&r);
      }
      const auto outcomes =
          code::code_reports(selected, frame, *gateway, c_evidence, c_workers > 0 ? c_workers : cfg.run.workers);
      atomic_write(c_out, code::format_codes_csv(outcomes, frame));
      std::size_t coded = 0;
      for (const auto& o : outcomes) coded += o.coded ? 1 : 0;
      const double frac = outcomes.empty() ? 0.0 : double(outcomes.size() - coded) / double(outcomes.size());
      const bool over = frac > cfg.code.uncoded_ceiling;
      emit(g, {{"coded", coded}, {"uncoded", outcomes.size() - coded}, {"ceiling_exceeded", over}},
           fmt::format("coded {}, uncoded {}\n", coded, outcomes.size() - coded));
      return over ? 1 : 0;
    }

    if (*tab) {
      const auto frame = code::load_frame(t_frame);
      const auto outcomes = code::parse_codes_csv(read_text_file(t_codes), frame);
      std::vector<code::CodeVector> coded;
      std::size_t uncoded = 0;
      for (const auto& o : outcomes) {
        if (o.coded) coded.push_back(o.codes);
        else ++uncoded;
      }
      const auto t = code::tabulate(coded, frame, uncoded);
      const bool as_csv = fs::path(t_out).extension() == ".csv";
      const std::string body = as_csv ? code::render_tables_csv(t, frame) : code::render_tables_markdown(t, frame);
      atomic_write(t_out, body);
      ordered_json j{{"n_reports", t.n_reports}, {"n_uncoded", t.n_uncoded},
                     {"addressee_counts", t.addressee_counts}, {"sub_theme_counts", t.sub_theme_counts}};
      emit(g, j, as_csv ? "wrote " + t_out + "\n" : body);
      return 0;
    }

    if (*sample_cmd) {
      const auto cfg = resolve_config(g);
      if (sample_cmd->count("--n-pos") == 0) sa_pos = cfg.sample.n_pos;
      if (sample_cmd->count("--n-neg") == 0) sa_neg = cfg.sample.n_neg;
      if (sample_cmd->count("--seed") == 0) sa_seed = cfg.sample.seed;
      const auto verdicts = screen::parse_verdicts_csv(read_text_file(sa_screened));
      const auto records = corpus::load_corpus(sa_corpus);
      const auto s = validation::build_sample(verdicts, records, sa_pos, sa_neg, sa_seed);
      validation::save_sample(s, sa_out);
      emit(g, {{"items", s.items.size()}, {"n_pos", s.n_pos}, {"n_neg", s.n_neg}, {"seed", s.seed}},
           fmt::format("{} items ({} model-positive, {} model-negative) written to {}\n", s.items.size(), s.n_pos,
                       s.n_neg, sa_out));
      return 0;
    }

    if (*serve) {
      validation::AdjudicationStore store(validation::load_sample(sv_sample), sv_raters, fs::path(sv_state), sv_majority);
      validation::AdjudicationServer server(store, sv_static.empty() ? std::nullopt : std::optional<fs::path>(sv_static));
      const int port = server.bind(sv_host, sv_port);
      if (port < 0) throw Error("cannot bind " + sv_host + ":" + std::to_string(sv_port));

      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      emit(g, {{"host", sv_host}, {"port", port}}, fmt::format("serving on http://{}:{}/\n", sv_host, port));
      std::cout.flush();
      server.serve();
      return 0;
    }

    if (*stats) {
      const int picked = int(st_cohen) + int(st_fleiss) + int(st_panel) + int(st_validate);
      if (picked != 1) throw ConfigError("choose exactly one of --cohen, --fleiss, --panel, --validate");
      const auto se = st_se == "nonnull" ? validation::KappaSe::nonnull : validation::KappaSe::null_hypothesis;
      auto report_text = [](const validation::AgreementReport& r) {
        return fmt::format("kappa {:.4f} (95% CI {:.4f} to {:.4f}), raw agreement {:.4f}, chance agreement {:.4f}, "
                           "n = {}{}\n",
                           r.kappa, r.ci_low, r.ci_high, r.p_observed, r.p_expected, r.n_items,
                           r.degenerate ? " [degenerate: constant labels]" : "");
      };
      if (st_panel) {
        const auto plan = validation::plan_panel(st_kappa0, st_n, st_prev, st_min_raters, st_max_raters);
        ordered_json bounds = ordered_json::object();
        std::string text;
        for (const auto& [m, b] : plan.per_rater_bounds) {
          bounds[std::to_string(m)] = b;
          text += fmt::format("{} raters: expected lower bound {:.3f}\n", m, b);
        }
        emit(g, {{"kappa0", st_kappa0}, {"n_subjects", st_n}, {"prevalence", st_prev}, {"per_rater_bounds", bounds}},
             text);
        return 0;
      }
      if (st_validate) {
        if (st_sample.empty() || st_consensus.empty()) throw ConfigError("--validate needs --sample and --consensus");
        const auto s = validation::load_sample(st_sample);
        std::map<std::string, bool> model;
        for (const auto& it : s.items) model[it.item_id] = it.hidden_model_verdict;
        const auto v = validation::validate_pipeline(model, validation::load_consensus(st_consensus).final_labels(), se);
        ordered_json j = validation::to_json(v.agreement);
        j["confusion"] = {{"tp", v.confusion.tp}, {"fp", v.confusion.fp}, {"fn", v.confusion.fn}, {"tn", v.confusion.tn}};
        emit(g, j,
             report_text(v.agreement) + fmt::format("TP {}  FP {}  FN {}  TN {}\n", v.confusion.tp, v.confusion.fp,
                                                    v.confusion.fn, v.confusion.tn));
        return 0;
      }
      if (st_labels.empty()) throw ConfigError("--cohen and --fleiss need --labels");
      const auto labels = validation::parse_labels_csv(read_text_file(st_labels));
      const auto m = validation::RatingMatrix::from_labels(labels, {}, st_raters);
      validation::AgreementReport r;
      if (st_cohen) {
        if (m.rater_ids.size() != 2) throw ConfigError("Cohen's kappa compares exactly two raters; use --raters a,b");
        r = validation::cohen_kappa(m.column(0), m.column(1), se);
      } else {
        r = validation::fleiss_kappa(m.cells);
      }
      emit(g, validation::to_json(r), report_text(r));
      return 0;
    }

    if (*cons) {
      const auto m = validation::RatingMatrix::from_labels(validation::parse_labels_csv(read_text_file(co_labels)));
      auto c = validation::Consensus::from_matrix(m, co_majority);
      if (!co_out.empty() && fs::exists(co_out)) {
        for (const auto& [id, label] : validation::load_consensus(co_out).resolutions()) c.resolve(id, label);
      }
      if (!co_resolve.empty()) {
        csv::Table t(csv::parse(read_text_file(co_resolve)));
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::string& label = t.at(i, "label");
          if (label != "0" && label != "1") {
            throw ParseError(co_resolve + " row " + std::to_string(i + 2) + ": label must be 0 or 1, got '" + label + "'");
          }
          c.resolve(t.at(i, "item_id"), label == "1" ? 1 : 0);
        }
      }
      if (!co_out.empty()) validation::save_consensus(c, co_out);
      const auto open = c.unresolved();
      if (!co_final.empty() && open.empty()) {
        std::vector<csv::Row> rows{{"item_id", "label"}};
        for (const auto& [id, label] : c.final_labels()) rows.push_back({id, std::to_string(label)});
        atomic_write(co_final, csv::format(rows));
      }
      ordered_json dis = ordered_json::array();
      std::string text = fmt::format("{} disagreement(s), {} unresolved\n", c.disagreements().size(), open.size());
      for (const auto& d : c.disagreements()) {
        dis.push_back({{"item_id", d.item_id}, {"labels", d.labels}});
        std::string ls;
        for (const auto& [rater, l] : d.labels) ls += fmt::format(" {}={}", rater, l);
        text += "  " + d.item_id + ":" + ls + (c.resolutions().count(d.item_id) ? " (resolved)\n" : "\n");
      }
      emit(g, {{"disagreements", dis}, {"unresolved", open}, {"complete", open.empty()}}, text);
      return open.empty() ? 0 : 1;
    }

    if (*run) {
      auto cfg = resolve_config(g);
      if (!r_out.empty()) cfg.run.out_dir = r_out;
      pipeline::RunOptions opt;
      opt.fresh = r_fresh;
      if (!r_stop.empty()) opt.stop_after = r_stop;
      opt.fixture = fixture_of(g);
      const auto outcome = pipeline::run_all(cfg, opt);
      const auto& m = outcome.manifest;
      std::string text;
      for (const auto& s : m.stages) {
        text += fmt::format("{:<9} {:<10} {:>8.2f} s {}\n", s.name, s.status, s.wall_seconds,
                            s.error.empty() ? s.counts.dump() : s.error);
      }
      text += fmt::format("total {:.2f} s, status {}, manifest {}\n", m.total_wall_seconds, m.status,
                          pipeline::run_paths(cfg).manifest.string());
      emit(g, m.to_json(), text);
      return outcome.exit_code;
    }
  } catch (const ConfigError& e) {
    std::cerr << "pfd: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pfd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
