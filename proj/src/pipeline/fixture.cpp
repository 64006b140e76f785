#include "pfd/pipeline/fixture.hpp"

#include "pfd/common/error.hpp"
#include "pfd/common/fs.hpp"

namespace pfd::pipeline {

std::vector<ScriptRule> parse_script(const nlohmann::json& j) {
  std::vector<ScriptRule> rules;
  try {
    for (const auto& r : j.at("rules")) {
      ScriptRule rule;
      rule.schema = r.value("schema", "");
      if (r.contains("contains")) {
        for (const auto& c : r.at("contains")) rule.contains.push_back(c.get<std::string>());
      }
      for (const auto& resp : r.at("responses")) rule.responses.push_back(resp);
      if (rule.responses.empty()) throw ConfigError("script rule without responses");
      rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gateway script: ") + e.what());
  }
  return rules;
}

std::shared_ptr<llm::ScriptedTransport> scripted_transport(std::vector<ScriptRule> rules) {
  return std::make_shared<llm::ScriptedTransport>([rules = std::move(rules)](const nlohmann::json& request) {
    const std::string schema = llm::request_schema_name(request);
    const std::string text = llm::request_text(request);
    for (const auto& rule : rules) {
      if (schema.rfind(rule.schema, 0) != 0) continue;
      bool all = true;
      for (const auto& c : rule.contains) all = all && text.find(c) != std::string::npos;
      if (!all) continue;
      // Earlier failed attempts show up as assistant turns.
      std::size_t attempt = 0;
      for (const auto& m : request.at("messages")) attempt += m.value("role", "") == "assistant" ? 1 : 0;
      const auto& resp = rule.responses[std::min(attempt, rule.responses.size() - 1)];
      const std::string content = resp.is_string() ? resp.get<std::string>() : resp.dump();
      // Token counts are a deterministic function of the exchange.
      return llm::ok_response(content, static_cast<long>(text.size() / 4), static_cast<long>(content.size() / 4));
    }
    return llm::TransportResponse{404, R"({"error":"no scripted response"})", std::nullopt, ""};
  });
}

std::shared_ptr<llm::ScriptedTransport> load_scripted_transport(const std::filesystem::path& path) {
  try {
    return scripted_transport(parse_script(nlohmann::json::parse(read_text_file(path))));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

FixturePaths fixture_paths(const std::filesystem::path& dir) {
  return {dir / "archive", dir / "gateway.json", dir / "config.yaml"};
}

}  // namespace pfd::pipeline
