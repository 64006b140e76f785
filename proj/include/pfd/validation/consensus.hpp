#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pfd/validation/kappa.hpp"

namespace pfd::validation {

struct LabelRecord {
  std::string item_id;
  std::string rater_id;
  int label = 0;
  std::string note;
  bool operator==(const LabelRecord&) const = default;
};

// CSV columns item_id, rater_id, label, with an optional note column.
std::string format_labels_csv(const std::vector<LabelRecord>& labels);
std::vector<LabelRecord> parse_labels_csv(const std::string& text);

struct RatingMatrix {
  std::vector<std::string> item_ids;
  std::vector<std::string> rater_ids;
  RatingGrid cells;  // [item][rater]

  bool complete() const;
  std::vector<int> column(std::size_t rater) const;  // requires complete()

  // Items and raters default to sorted order of appearance. Explicit lists
  // fix the order and reject labels outside them. Throws StatsError on a
  // second label for the same (item, rater), or fewer than 2 raters.
  static RatingMatrix from_labels(const std::vector<LabelRecord>& labels, std::vector<std::string> item_ids = {},
                                  std::vector<std::string> rater_ids = {});
};

class IncompleteConsensusError : public StatsError {
 public:
  using StatsError::StatsError;
};

struct Disagreement {
  std::string item_id;
  std::map<std::string, int> labels;  // rater -> label
};

// Unanimous items adopt their label. The rest wait for a human resolution,
// unless majority mode is on, in which case a strict majority also adopts
// (ties still wait).
class Consensus {
 public:
  static Consensus from_matrix(const RatingMatrix& matrix, bool majority = false);

  const std::vector<Disagreement>& disagreements() const { return disagreements_; }
  const std::map<std::string, int>& resolutions() const { return resolutions_; }
  std::vector<std::string> unresolved() const;
  bool complete() const { return unresolved().empty(); }

  // Throws StatsError if the item is not a disagreement or label not 0/1.
  void resolve(const std::string& item_id, int label);

  // Throws IncompleteConsensusError naming the unresolved items.
  std::map<std::string, int> final_labels() const;

  nlohmann::json to_json() const;
  static Consensus from_json(const nlohmann::json& j);

 private:
  std::map<std::string, int> agreed_;
  std::vector<Disagreement> disagreements_;
  std::map<std::string, int> resolutions_;
};

void save_consensus(const Consensus& c, const std::filesystem::path& path);
Consensus load_consensus(const std::filesystem::path& path);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ValidationReport {
  AgreementReport agreement;
  ConfusionMatrix confusion;  // model as prediction, consensus as truth
};

// Throws StatsError listing ids present on only one side.
ValidationReport validate_pipeline(const std::map<std::string, bool>& model_verdicts,
                                   const std::map<std::string, int>& consensus_labels,
                                   KappaSe se = KappaSe::null_hypothesis);

nlohmann::json to_json(const AgreementReport& r);

}  // namespace pfd::validation
