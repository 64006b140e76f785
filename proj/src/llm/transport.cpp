#include "pfd/llm/transport.hpp"

#include <httplib.h>

#include "pfd/corpus/url.hpp"

namespace pfd::llm {

TransportResponse HttpTransport::post(const std::string& url, const nlohmann::json& body,
                                      const std::map<std::string, std::string>& headers,
                                      std::chrono::seconds timeout) {
  auto u = corpus::Url::parse(url);
  if (!u) return TransportResponse{0, "", std::nullopt, "malformed endpoint URL"};
  httplib::Client client(u->origin());
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(u->target(), h, body.dump(), "application/json");
  if (!res) return TransportResponse{0, "", std::nullopt, httplib::to_string(res.error())};
  TransportResponse out{res->status, res->body, std::nullopt, ""};
  if (res->has_header("Retry-After")) {
    try {
      out.retry_after_s = std::stod(res->get_header_value("Retry-After"));
    } catch (...) {
    }
  }
  return out;
}

TransportResponse ScriptedTransport::post(const std::string&, const nlohmann::json& body,
                                          const std::map<std::string, std::string>&,
                                          std::chrono::seconds) {
  ++requests_;
  std::lock_guard lk(mu_);
  return handler_(body);
}

nlohmann::json make_chat_response(const std::string& content, long prompt_tokens,
                                  long completion_tokens) {
  return nlohmann::json{
      {"object", "chat.completion"},
      {"choices",
       {{{"index", 0},
         {"message", {{"role", "assistant"}, {"content", content}}},
         {"finish_reason", "stop"}}}},
      {"usage",
       {{"prompt_tokens", prompt_tokens},
        {"completion_tokens", completion_tokens},
        {"total_tokens", prompt_tokens + completion_tokens}}}};
}

TransportResponse ok_response(const std::string& content, long prompt_tokens, long completion_tokens) {
  return TransportResponse{200, make_chat_response(content, prompt_tokens, completion_tokens).dump(),
                           std::nullopt, ""};
}

std::string request_text(const nlohmann::json& request) {
  std::string out;
  if (!request.contains("messages")) return out;
  for (const auto& m : request.at("messages")) {
    const auto& c = m.value("content", nlohmann::json());
    if (c.is_string()) {
      out += c.get<std::string>();
      out += "\n";
    } else if (c.is_array()) {
      for (const auto& part : c) {
        if (part.value("type", "") == "text") {
          out += part.value("text", "");
          out += "\n";
        }
      }
    }
  }
  return out;
}

std::string request_schema_name(const nlohmann::json& request) {
  const auto rf = request.value("response_format", nlohmann::json::object());
  if (!rf.is_object() || !rf.contains("json_schema")) return "";
  return rf.at("json_schema").value("name", "");
}

}  // namespace pfd::llm
