#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "pfd/common/date.hpp"
#include "pfd/llm/gateway.hpp"

namespace pfd::pipeline {

// One YAML file with a section per stage. Relative paths are resolved
// against the directory of the file they appear in.
struct PipelineConfig {
  struct Run {
    std::filesystem::path out_dir = "run";
    int workers = 4;
  } run;

  struct Scrape {
    std::string base_url = "https://www.judiciary.uk/prevention-of-future-death-reports/";
    Date from = Date::from_ymd(2013, 7, 1);
    Date to = Date::from_ymd(2023, 11, 30);
    int dpi = 200;
    int scanned_chars_per_page = 200;
    double requests_per_second = 1.0;
    int checkpoint_every = 50;
    int max_retries = 3;
  } scrape;

  llm::ModelConfig model;
  // Defaults to <out_dir>/cache/llm.
  std::optional<std::filesystem::path> llm_cache_dir;

  struct Screen {
    std::filesystem::path question = "data/questions/child_suicide.yaml";
    bool evidence = true;
    double unscreenable_ceiling = 0.05;
  } screen;

  struct Code {
    std::filesystem::path frame = "data/frames/ons_child_suicide.yaml";
    bool evidence = false;
    double uncoded_ceiling = 0.05;
  } code;

  struct Sample {
    std::size_t n_pos = 72;
    std::size_t n_neg = 72;
    std::uint64_t seed = 7;
  } sample;

  // Throws ConfigError naming the offending key.
  void validate() const;
  nlohmann::json to_json() const;  // snapshot for the run manifest; never holds secrets
};

PipelineConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace pfd::pipeline
