#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace pfd::llm {

struct TransportResponse {
  int status = 0;  // 0: no HTTP response (connection or timeout failure)
  std::string body;
  std::optional<double> retry_after_s;
  std::string error;
};

// Moves one chat-completions request body to an endpoint.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse post(const std::string& url, const nlohmann::json& body,
                                 const std::map<std::string, std::string>& headers,
                                 std::chrono::seconds timeout) = 0;
};

// HTTP(S) via cpp-httplib.
class HttpTransport final : public Transport {
 public:
  TransportResponse post(const std::string& url, const nlohmann::json& body,
                         const std::map<std::string, std::string>& headers,
                         std::chrono::seconds timeout) override;
};

// In-process endpoint for tests and fixture runs: a handler receives the
// decoded request body and returns the wire response.
class ScriptedTransport final : public Transport {
 public:
  using Handler = std::function<TransportResponse(const nlohmann::json& request)>;
  explicit ScriptedTransport(Handler handler) : handler_(std::move(handler)) {}

  TransportResponse post(const std::string& url, const nlohmann::json& body,
                         const std::map<std::string, std::string>& headers,
                         std::chrono::seconds timeout) override;

  std::size_t request_count() const { return requests_; }

 private:
  Handler handler_;
  std::mutex mu_;
  std::atomic<std::size_t> requests_{0};
};

// Builds a chat-completions response envelope around `content`.
nlohmann::json make_chat_response(const std::string& content, long prompt_tokens = 0,
                                  long completion_tokens = 0);
TransportResponse ok_response(const std::string& content, long prompt_tokens = 0,
                              long completion_tokens = 0);

// Text parts of every message in a request, joined; used by scripted
// handlers to recognise which report a request is about.
std::string request_text(const nlohmann::json& request);
// response_format.json_schema.name, or "" when absent.
std::string request_schema_name(const nlohmann::json& request);

}  // namespace pfd::llm
