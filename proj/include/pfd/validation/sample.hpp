#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "pfd/corpus/report.hpp"
#include "pfd/screen/screener.hpp"
#include "pfd/validation/kappa.hpp"

namespace pfd::validation {

struct SampleItem {
  std::string item_id;  // the report id
  std::vector<std::pair<std::string, std::string>> sections;  // shown to reviewers
  bool hidden_model_verdict = false;                          // never shown
};

struct AdjudicationSample {
  std::vector<SampleItem> items;  // presentation order
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t seed = 0;
};

// Uniform integer in [0, bound) without modulo bias (Lemire's method), so
// draws are identical on every platform for a given engine state.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

// Seeded draw of n_pos model-positive and n_neg model-negative reports, each
// uniformly without replacement from its pool (pools are ordered by id
// first, so input order does not matter), then a seeded shuffle of the
// combined list. Unscreenable verdicts are in neither pool. Throws
// StatsError stating the available counts when a pool is too small, or
// when a drawn report is missing from `reports`.
AdjudicationSample build_sample(const std::vector<screen::ScreenVerdict>& verdicts,
                                const std::vector<corpus::ReportRecord>& reports, std::size_t n_pos,
                                std::size_t n_neg, std::uint64_t seed);

// What a reviewer receives for one item: no verdict of any kind.
nlohmann::json presentation_payload(const SampleItem& item, std::size_t position, std::size_t total);

// Full sample including hidden verdicts (the facilitator's file).
nlohmann::json sample_to_json(const AdjudicationSample& s);
AdjudicationSample sample_from_json(const nlohmann::json& j);
void save_sample(const AdjudicationSample& s, const std::filesystem::path& path);
AdjudicationSample load_sample(const std::filesystem::path& path);

}  // namespace pfd::validation
