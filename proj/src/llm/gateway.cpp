#include "pfd/llm/gateway.hpp"

#include <cstdlib>
#include <map>
#include <thread>

#include "pfd/common/digest.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/log.hpp"
#include "pfd/common/text.hpp"

namespace pfd::llm {

void ModelConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must lie in [0, 2], got " + std::to_string(temperature));
  }
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (model_name.empty()) throw ConfigError("model name is empty");
  if (endpoint_url.empty()) throw ConfigError("endpoint URL is empty");
  if (rate_limit_rpm < 0) throw ConfigError("rate limit must be >= 0");
}

std::string cache_key(const ModelConfig& config, const std::string& system, const std::string& user,
                      std::span<const corpus::PageImage> images, const SchemaSpec& schema) {
  nlohmann::ordered_json j;
  j["model"] = config.model_name;
  // Fixed precision so 0 and 0.0 give one key.
  j["temperature"] = std::to_string(config.temperature);
  j["system"] = system;
  j["user"] = user;
  auto imgs = nlohmann::ordered_json::array();
  for (const auto& img : images) imgs.push_back(sha256_hex(base64_decode(img.encoded)));
  j["images"] = imgs;
  j["schema"] = schema.canonical();
  return sha256_hex(j.dump());
}

nlohmann::json build_request(const ModelConfig& config, const StructuredRequest& req,
                             const SchemaSpec& schema) {
  nlohmann::json user_content;
  if (req.images.empty()) {
    user_content = req.user;
  } else {
    user_content = nlohmann::json::array();
    user_content.push_back({{"type", "text"}, {"text", req.user}});
    for (const auto& img : req.images) {
      user_content.push_back(
          {{"type", "image_url"},
           {"image_url", {{"url", "data:" + img.media_type + ";base64," + img.encoded}, {"detail", "high"}}}});
    }
  }
  const bool all_required = std::all_of(schema.fields().begin(), schema.fields().end(),
                                        [](const FieldSpec& f) { return f.required; });
  return nlohmann::json{
      {"model", config.model_name},
      {"temperature", config.temperature},
      {"messages",
       {{{"role", "system"}, {"content", req.system}}, {{"role", "user"}, {"content", user_content}}}},
      {"response_format",
       {{"type", "json_schema"},
        {"json_schema", {{"name", schema.name()}, {"strict", all_required}, {"schema", schema.json_schema()}}}}}};
}

namespace {

class RateLimiter {
 public:
  void acquire(double rpm) {
    if (rpm <= 0) return;
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / rpm));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lk(mu_);
      slot = std::max(std::chrono::steady_clock::now(), next_);
      next_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

  // After a 429 nobody may send until `until`.
  void block_until(std::chrono::steady_clock::time_point until) {
    std::lock_guard lk(mu_);
    next_ = std::max(next_, until);
  }

 private:
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

RateLimiter& limiter_for(const std::string& endpoint) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<RateLimiter>> limiters;
  std::lock_guard lk(mu);
  auto& slot = limiters[endpoint];
  if (!slot) slot = std::make_unique<RateLimiter>();
  return *slot;
}

struct Envelope {
  std::optional<std::string> content;
  Usage usage;
};

Envelope read_envelope(const std::string& body) {
  Envelope env;
  try {
    const auto j = nlohmann::json::parse(body);
    if (j.contains("usage") && j.at("usage").is_object()) {
      env.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0L);
      env.usage.completion_tokens = j.at("usage").value("completion_tokens", 0L);
    }
    const auto& msg = j.at("choices").at(0).at("message");
    if (msg.at("content").is_string()) env.content = msg.at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return env;
}

}  // namespace

Gateway::Gateway(ModelConfig config, std::shared_ptr<Transport> transport,
                 std::optional<std::filesystem::path> cache_dir)
    : config_(std::move(config)), transport_(std::move(transport)), cache_dir_(std::move(cache_dir)) {
  config_.validate();
  if (!transport_) throw ConfigError("gateway needs a transport");
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

GatewayStats Gateway::stats() const {
  GatewayStats s;
  s.calls = calls_;
  s.cache_hits = cache_hits_;
  s.network_requests = network_requests_;
  s.usage = Usage{prompt_tokens_, completion_tokens_};
  return s;
}

std::optional<CompletionResult> Gateway::cache_read(const std::string& key, const SchemaSpec& schema,
                                                    const SemanticCheck& check) const {
  if (!cache_dir_) return std::nullopt;
  const auto path = *cache_dir_ / key.substr(0, 2) / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_text_file(path));
    auto parsed = schema.parse(j.at("raw_text").get<std::string>());
    if (!parsed.value) return std::nullopt;
    if (check && check(*parsed.value)) return std::nullopt;
    CompletionResult r;
    r.parsed = std::move(*parsed.value);
    r.raw_text = j.at("raw_text").get<std::string>();
    r.attempts = j.value("attempts", 1);
    r.cached = true;
    return r;
  } catch (const std::exception& e) {
    logger()->warn("ignoring unreadable cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void Gateway::cache_write(const std::string& key, const CompletionResult& result) const {
  if (!cache_dir_) return;
  nlohmann::ordered_json j;
  j["key"] = key;
  j["model"] = config_.model_name;
  j["raw_text"] = result.raw_text;
  j["attempts"] = result.attempts;
  j["usage"] = {{"prompt_tokens", result.usage.prompt_tokens},
                {"completion_tokens", result.usage.completion_tokens}};
  atomic_write(*cache_dir_ / key.substr(0, 2) / (key + ".json"), j.dump(1));
}

TransportResponse Gateway::send(const nlohmann::json& body) {
  std::map<std::string, std::string> headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  RateLimiter& limiter = limiter_for(config_.endpoint_url);
  int failures = 0;
  int rate_waits = 0;
  while (true) {
    limiter.acquire(config_.rate_limit_rpm);
    ++network_requests_;
    TransportResponse resp = transport_->post(config_.endpoint_url, body, headers, config_.timeout);
    if (resp.status >= 200 && resp.status < 300) return resp;
    if (resp.status == 429) {
      if (++rate_waits > config_.max_rate_limit_waits) {
        throw TransportError("endpoint kept answering HTTP 429", 429);
      }
      std::chrono::steady_clock::duration wait = config_.backoff * rate_waits;
      if (resp.retry_after_s) {
        wait = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(*resp.retry_after_s));
      } else if (config_.rate_limit_rpm > 0) {
        wait = std::max(wait, std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(60.0 / config_.rate_limit_rpm)));
      }
      limiter.block_until(std::chrono::steady_clock::now() + wait);
      logger()->warn("rate limited by endpoint; waiting {} ms",
                     std::chrono::duration_cast<std::chrono::milliseconds>(wait).count());
      continue;
    }
    if (resp.status >= 400 && resp.status < 500) {
      throw TransportError("endpoint rejected request with HTTP " + std::to_string(resp.status), resp.status,
                           false);
    }
    if (++failures > config_.max_retries) {
      throw TransportError(resp.status == 0 ? "endpoint unreachable: " + resp.error
                                            : "endpoint failed with HTTP " + std::to_string(resp.status),
                           resp.status);
    }
    std::this_thread::sleep_for(config_.backoff * failures);
  }
}

CompletionResult Gateway::complete_structured(const std::string& system, const std::string& user,
                                              std::span<const corpus::PageImage> images,
                                              const SchemaSpec& schema, const SemanticCheck& check) {
  ++calls_;
  const std::string key = cache_key(config_, system, user, images, schema);
  if (auto hit = cache_read(key, schema, check)) {
    ++cache_hits_;
    return *hit;
  }

  StructuredRequest req{system, user, std::vector<corpus::PageImage>(images.begin(), images.end())};
  nlohmann::json body = build_request(config_, req, schema);
  std::vector<std::string> raws;
  std::vector<std::string> all_errors;
  Usage spent;
  for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
    const TransportResponse resp = send(body);
    const Envelope env = read_envelope(resp.body);
    spent += env.usage;
    prompt_tokens_ += env.usage.prompt_tokens;
    completion_tokens_ += env.usage.completion_tokens;

    std::vector<std::string> errors;
    std::string raw;
    if (!env.content) {
      raw = resp.body;
      errors.push_back("response envelope has no message content");
    } else {
      raw = *env.content;
      auto parsed = schema.parse(raw);
      if (parsed.value) {
        if (auto problem = check ? check(*parsed.value) : std::nullopt) {
          errors.push_back(*problem);
        } else {
          CompletionResult result{std::move(*parsed.value), raw, attempt, spent, false};
          cache_write(key, result);
          return result;
        }
      } else {
        errors = std::move(parsed.errors);
      }
    }
    raws.push_back(raw);
    for (const auto& e : errors) all_errors.push_back("attempt " + std::to_string(attempt) + ": " + e);
    body["messages"].push_back({{"role", "assistant"}, {"content", raw}});
    body["messages"].push_back(
        {{"role", "user"},
         {"content", "Your previous reply was rejected: " + join(errors, "; ") +
                         ". Reply again with a single JSON object that satisfies the schema and nothing else."}});
  }
  // Build the message before raws is moved into the exception.
  const std::string what =
      "no valid '" + schema.name() + "' response after " + std::to_string(raws.size()) + " attempts";
  throw SchemaViolationError(what, std::move(raws), std::move(all_errors));
}

}  // namespace pfd::llm
