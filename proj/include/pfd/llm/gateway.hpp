#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfd/common/error.hpp"
#include "pfd/corpus/page_image.hpp"
#include "pfd/llm/schema.hpp"
#include "pfd/llm/transport.hpp"

namespace pfd::llm {

struct ModelConfig {
  // Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
  // or http://localhost:11434/v1/chat/completions for a local server.
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-4.1";
  double temperature = 0.0;
  int max_retries = 2;
  std::chrono::seconds timeout{120};
  double rate_limit_rpm = 0;  // requests per minute; 0 disables
  std::string api_key_env = "OPENAI_API_KEY";
  // Base delay between transport retries and after HTTP 429 without a
  // Retry-After header.
  std::chrono::milliseconds backoff{1000};
  int max_rate_limit_waits = 5;

  // Throws ConfigError when temperature is outside [0, 2] or max_retries < 0.
  void validate() const;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;

  Usage& operator+=(const Usage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  bool operator==(const Usage&) const = default;
};

struct CompletionResult {
  nlohmann::json parsed;  // validated against the schema of the request
  std::string raw_text;
  int attempts = 1;
  Usage usage;  // tokens spent by this call; zero when served from cache
  bool cached = false;
};

// No attempt produced a value that validates. Carries every raw reply.
class SchemaViolationError : public Error {
 public:
  SchemaViolationError(const std::string& what, std::vector<std::string> raw_attempts,
                       std::vector<std::string> errors)
      : Error(what), raw_attempts_(std::move(raw_attempts)), errors_(std::move(errors)) {}
  const std::vector<std::string>& raw_attempts() const { return raw_attempts_; }
  const std::vector<std::string>& errors() const { return errors_; }
  int attempts() const { return static_cast<int>(raw_attempts_.size()); }

 private:
  std::vector<std::string> raw_attempts_;
  std::vector<std::string> errors_;
};

// The endpoint could not be reached or kept failing; safe to retry later.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, bool retryable = true)
      : Error(what), status_(status), retryable_(retryable) {}
  int status() const { return status_; }
  // False for client errors such as 401, which will not heal on retry.
  bool retryable() const { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

// Optional post-schema check. Returns an error message to trigger a retry
// (appended to the conversation like a schema error), or nullopt.
using SemanticCheck = std::function<std::optional<std::string>(const nlohmann::json&)>;

struct StructuredRequest {
  std::string system;
  std::string user;
  std::vector<corpus::PageImage> images;
};

// Digest over model name, temperature, prompts, decoded image bytes and the
// schema. The endpoint URL is not part of the key.
std::string cache_key(const ModelConfig& config, const std::string& system, const std::string& user,
                      std::span<const corpus::PageImage> images, const SchemaSpec& schema);

// Wire body for the first attempt (tests inspect it).
nlohmann::json build_request(const ModelConfig& config, const StructuredRequest& req,
                             const SchemaSpec& schema);

struct GatewayStats {
  std::size_t calls = 0;
  std::size_t cache_hits = 0;
  std::size_t network_requests = 0;
  Usage usage;

  double cache_hit_rate() const {
    return calls == 0 ? 0.0 : static_cast<double>(cache_hits) / static_cast<double>(calls);
  }
};

// Shareable across threads. Rate limiting is global per endpoint URL, across
// all Gateway instances in the process.
class Gateway {
 public:
  Gateway(ModelConfig config, std::shared_ptr<Transport> transport,
          std::optional<std::filesystem::path> cache_dir = std::nullopt);

  CompletionResult complete_structured(const std::string& system, const std::string& user,
                                       std::span<const corpus::PageImage> images,
                                       const SchemaSpec& schema, const SemanticCheck& check = {});

  const ModelConfig& config() const { return config_; }
  GatewayStats stats() const;

 private:
  std::optional<CompletionResult> cache_read(const std::string& key, const SchemaSpec& schema,
                                             const SemanticCheck& check) const;
  void cache_write(const std::string& key, const CompletionResult& result) const;
  TransportResponse send(const nlohmann::json& body);

  ModelConfig config_;
  std::shared_ptr<Transport> transport_;
  std::optional<std::filesystem::path> cache_dir_;

  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> network_requests_{0};
  std::atomic<long> prompt_tokens_{0};
  std::atomic<long> completion_tokens_{0};
};

}  // namespace pfd::llm
