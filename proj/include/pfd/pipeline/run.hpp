#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pfd/corpus/http.hpp"
#include "pfd/llm/gateway.hpp"
#include "pfd/pipeline/config.hpp"

namespace pfd::pipeline {

inline constexpr int kManifestSchemaVersion = 1;

// Stage names in execution order.
const std::vector<std::string>& stage_names();

struct RunOptions {
  bool fresh = false;
  std::optional<std::string> stop_after;
  std::optional<std::filesystem::path> fixture;  // recorded archive + scripted model
};

struct StageRecord {
  std::string name;
  std::string status;  // completed, resumed (output reused), failed, not_run
  double wall_seconds = 0;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  std::string error;
};

struct RunManifest {
  nlohmann::json config;
  std::string status = "running";  // completed, stopped, failed
  std::string failed_stage;
  std::string error;
  std::vector<StageRecord> stages;
  double total_wall_seconds = 0;
  std::size_t corpus_size = 0;
  std::string model_name;
  double cache_hit_rate = 0;
  llm::Usage usage;
  bool fixture = false;
  std::string started_at;
  std::string finished_at;

  nlohmann::ordered_json to_json() const;
};

struct RunOutcome {
  RunManifest manifest;
  int exit_code = 0;
};

// Output files under run.out_dir.
struct RunPaths {
  std::filesystem::path out_dir;
  std::filesystem::path corpus, scrape_log, screen, codes, tables_md, tables_csv, sample, manifest, state;
  std::filesystem::path fetch_cache, llm_cache, crawl_checkpoint;
};
RunPaths run_paths(const PipelineConfig& config);

// Live HTTP or the fixture's archive.
std::unique_ptr<corpus::HttpFetcher> make_fetcher(const PipelineConfig& config,
                                                  const std::optional<std::filesystem::path>& fixture);
// Live endpoint or the fixture's scripted one, caching under the run dir.
std::shared_ptr<llm::Gateway> make_gateway(const PipelineConfig& config,
                                           const std::optional<std::filesystem::path>& fixture);

// scrape -> screen -> code -> tabulate -> sample. Completed stages are
// recorded in <out_dir>/state.json and reused on the next call unless
// options.fresh. The manifest is written atomically when the call ends,
// whether or not a stage failed. Exit code 0 only when every requested stage
// completed and the unscreenable and uncoded fractions are within their
// ceilings.
RunOutcome run_all(const PipelineConfig& config, const RunOptions& options);

std::string utc_now_iso();

}  // namespace pfd::pipeline
