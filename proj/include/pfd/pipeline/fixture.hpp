#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pfd/llm/transport.hpp"

namespace pfd::pipeline {

// Scripted model endpoint for fixture runs, read from JSON:
//   {"rules": [{"schema": "<name prefix>", "contains": ["..", ..],
//               "responses": [<object or raw string>, ...]}, ...]}
// A request takes the first rule whose schema prefix matches and whose
// strings all occur in the request's text. The n-th attempt of the same
// conversation gets responses[min(n, last)], so a rule can script a bad
// reply followed by a good one. Unmatched requests get HTTP 404.
struct ScriptRule {
  std::string schema;
  std::vector<std::string> contains;
  std::vector<nlohmann::json> responses;
};

std::vector<ScriptRule> parse_script(const nlohmann::json& j);
std::shared_ptr<llm::ScriptedTransport> scripted_transport(std::vector<ScriptRule> rules);
std::shared_ptr<llm::ScriptedTransport> load_scripted_transport(const std::filesystem::path& path);

// Layout of a fixture directory.
struct FixturePaths {
  std::filesystem::path archive;  // recorded HTTP archive (manifest.json)
  std::filesystem::path gateway;  // scripted endpoint rules
  std::filesystem::path config;   // pipeline config used by run-all --fixture
};
FixturePaths fixture_paths(const std::filesystem::path& dir);

}  // namespace pfd::pipeline
