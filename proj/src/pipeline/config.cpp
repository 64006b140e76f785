#include "pfd/pipeline/config.hpp"

#include <yaml-cpp/yaml.h>

#include "pfd/common/fs.hpp"

namespace pfd::pipeline {

namespace {

template <typename T>
void read(const YAML::Node& section, const char* key, T& out, const std::string& where) {
  if (!section || !section[key]) return;
  try {
    out = section[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config key " + where + "." + key + " has the wrong type");
  }
}

void read_path(const YAML::Node& section, const char* key, std::filesystem::path& out, const std::string& where,
               const std::filesystem::path& base) {
  std::string s;
  read(section, key, s, where);
  if (s.empty()) return;
  std::filesystem::path p(s);
  out = p.is_absolute() ? p : (base / p).lexically_normal();
}

void read_date(const YAML::Node& section, const char* key, Date& out, const std::string& where) {
  std::string s;
  read(section, key, s, where);
  if (s.empty()) return;
  auto d = parse_date(s);
  if (!d) throw ConfigError("config key " + where + "." + key + ": cannot parse date '" + s + "'");
  out = *d;
}

void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError("config section '" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config key " + (where.empty() ? key : where + "." + key));
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (run.workers < 1) throw ConfigError("run.workers must be >= 1");
  if (scrape.to < scrape.from) throw ConfigError("scrape.to is before scrape.from");
  if (scrape.dpi < 72 || scrape.dpi > 600) throw ConfigError("scrape.dpi must lie in [72, 600]");
  if (scrape.requests_per_second <= 0) throw ConfigError("scrape.requests_per_second must be > 0");
  if (screen.unscreenable_ceiling < 0 || screen.unscreenable_ceiling > 1) {
    throw ConfigError("screen.unscreenable_ceiling must lie in [0, 1]");
  }
  if (code.uncoded_ceiling < 0 || code.uncoded_ceiling > 1) throw ConfigError("code.uncoded_ceiling must lie in [0, 1]");
  model.validate();
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["run"] = {{"out_dir", run.out_dir.string()}, {"workers", run.workers}};
  j["scrape"] = {{"base_url", scrape.base_url},
                 {"from", scrape.from.iso()},
                 {"to", scrape.to.iso()},
                 {"dpi", scrape.dpi},
                 {"scanned_chars_per_page", scrape.scanned_chars_per_page},
                 {"requests_per_second", scrape.requests_per_second},
                 {"checkpoint_every", scrape.checkpoint_every},
                 {"max_retries", scrape.max_retries}};
  j["model"] = {{"endpoint_url", model.endpoint_url},
                {"model_name", model.model_name},
                {"temperature", model.temperature},
                {"max_retries", model.max_retries},
                {"timeout_s", model.timeout.count()},
                {"rate_limit_rpm", model.rate_limit_rpm},
                {"api_key_env", model.api_key_env},  // the variable's name only
                {"cache_dir", llm_cache_dir ? llm_cache_dir->string() : ""}};
  j["screen"] = {{"question", screen.question.string()},
                 {"evidence", screen.evidence},
                 {"unscreenable_ceiling", screen.unscreenable_ceiling}};
  j["code"] = {{"frame", code.frame.string()}, {"evidence", code.evidence}, {"uncoded_ceiling", code.uncoded_ceiling}};
  j["sample"] = {{"n_pos", sample.n_pos}, {"n_neg", sample.n_neg}, {"seed", sample.seed}};
  return j;
}

PipelineConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  // Paths default relative to the base directory too.
  c.run.out_dir = base / c.run.out_dir;
  c.screen.question = base / c.screen.question;
  c.code.frame = base / c.code.frame;
  if (!root || root.IsNull()) {
    c.validate();
    return c;
  }
  check_keys(root, {"run", "scrape", "model", "screen", "code", "sample"}, "");

  const auto run = root["run"];
  check_keys(run, {"out_dir", "workers"}, "run");
  read_path(run, "out_dir", c.run.out_dir, "run", base);
  read(run, "workers", c.run.workers, "run");

  const auto scrape = root["scrape"];
  check_keys(scrape, {"base_url", "from", "to", "dpi", "scanned_chars_per_page", "requests_per_second",
                      "checkpoint_every", "max_retries"},
             "scrape");
  read(scrape, "base_url", c.scrape.base_url, "scrape");
  read_date(scrape, "from", c.scrape.from, "scrape");
  read_date(scrape, "to", c.scrape.to, "scrape");
  read(scrape, "dpi", c.scrape.dpi, "scrape");
  read(scrape, "scanned_chars_per_page", c.scrape.scanned_chars_per_page, "scrape");
  read(scrape, "requests_per_second", c.scrape.requests_per_second, "scrape");
  read(scrape, "checkpoint_every", c.scrape.checkpoint_every, "scrape");
  read(scrape, "max_retries", c.scrape.max_retries, "scrape");

  const auto model = root["model"];
  check_keys(model, {"endpoint_url", "model_name", "temperature", "max_retries", "timeout_s", "rate_limit_rpm",
                     "api_key_env", "cache_dir", "backoff_ms"},
             "model");
  read(model, "endpoint_url", c.model.endpoint_url, "model");
  read(model, "model_name", c.model.model_name, "model");
  read(model, "temperature", c.model.temperature, "model");
  read(model, "max_retries", c.model.max_retries, "model");
  long timeout = c.model.timeout.count();
  read(model, "timeout_s", timeout, "model");
  c.model.timeout = std::chrono::seconds(timeout);
  long backoff = c.model.backoff.count();
  read(model, "backoff_ms", backoff, "model");
  c.model.backoff = std::chrono::milliseconds(backoff);
  read(model, "rate_limit_rpm", c.model.rate_limit_rpm, "model");
  read(model, "api_key_env", c.model.api_key_env, "model");
  std::filesystem::path cache;
  read_path(model, "cache_dir", cache, "model", base);
  if (!cache.empty()) c.llm_cache_dir = cache;

  const auto screen = root["screen"];
  check_keys(screen, {"question", "evidence", "unscreenable_ceiling"}, "screen");
  read_path(screen, "question", c.screen.question, "screen", base);
  read(screen, "evidence", c.screen.evidence, "screen");
  read(screen, "unscreenable_ceiling", c.screen.unscreenable_ceiling, "screen");

  const auto code = root["code"];
  check_keys(code, {"frame", "evidence", "uncoded_ceiling"}, "code");
  read_path(code, "frame", c.code.frame, "code", base);
  read(code, "evidence", c.code.evidence, "code");
  read(code, "uncoded_ceiling", c.code.uncoded_ceiling, "code");

  const auto sample = root["sample"];
  check_keys(sample, {"n_pos", "n_neg", "seed"}, "sample");
  read(sample, "n_pos", c.sample.n_pos, "sample");
  read(sample, "n_neg", c.sample.n_neg, "sample");
  read(sample, "seed", c.sample.seed, "sample");

  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError(path.string() + ": no such config file");
  try {
    return parse_config(read_text_file(path), std::filesystem::absolute(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace pfd::pipeline
