#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pfd/validation/consensus.hpp"
#include "pfd/validation/sample.hpp"

namespace pfd::validation {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Server-side state of one adjudication round. Every method is safe to call
// concurrently; writes are serialized and, when a state directory is set,
// persisted (labels.csv, resolutions.json) before the call returns.
class AdjudicationStore {
 public:
  AdjudicationStore(AdjudicationSample sample, std::vector<std::string> rater_ids,
                    std::optional<std::filesystem::path> state_dir = std::nullopt, bool majority = false);

  // GET /api/tasks/next?rater=ID
  ApiResponse next_task(const std::string& rater_id) const;
  // POST /api/labels {item_id, rater_id, label, note?}
  ApiResponse submit_label(const nlohmann::json& body);
  // GET /api/consensus/disagreements
  ApiResponse disagreements() const;
  // POST /api/consensus/resolutions {item_id, label}
  ApiResponse submit_resolution(const nlohmann::json& body);
  // GET /api/progress
  ApiResponse progress() const;
  // GET /api/stats: reviewer agreement, and model agreement once consensus
  // is final (the only response that reveals model verdicts).
  ApiResponse stats() const;

  std::vector<LabelRecord> labels() const;
  RatingMatrix matrix() const;

 private:
  RatingMatrix matrix_locked() const;
  nlohmann::json progress_locked() const;
  void persist_locked() const;

  AdjudicationSample sample_;
  std::vector<std::string> raters_;
  std::optional<std::filesystem::path> state_dir_;
  bool majority_;
  mutable std::mutex mu_;
  std::vector<LabelRecord> labels_;
  std::map<std::string, int> resolutions_;
};

// HTTP front end over a store. Optional static directory is served at "/".
class AdjudicationServer {
 public:
  AdjudicationServer(AdjudicationStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AdjudicationServer();
  AdjudicationServer(const AdjudicationServer&) = delete;
  AdjudicationServer& operator=(const AdjudicationServer&) = delete;

  // Returns the bound port (an ephemeral one when port is 0), or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pfd::validation
