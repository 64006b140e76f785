#include "pfd/validation/sample.hpp"

#include <algorithm>
#include <unordered_map>

#include "pfd/common/fs.hpp"

namespace pfd::validation {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw StatsError("bounded_draw with empty range");
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// First k of a seeded shuffle: a uniform k-subset.
std::vector<std::string> draw(std::vector<std::string> pool, std::size_t k, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded_draw(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

AdjudicationSample build_sample(const std::vector<screen::ScreenVerdict>& verdicts,
                                const std::vector<corpus::ReportRecord>& reports, std::size_t n_pos,
                                std::size_t n_neg, std::uint64_t seed) {
  std::vector<std::string> pos;
  std::vector<std::string> neg;
  for (const auto& v : verdicts) {
    if (!v.verdict) continue;
    (*v.verdict ? pos : neg).push_back(v.report_id);
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  neg.erase(std::unique(neg.begin(), neg.end()), neg.end());
  if (pos.size() < n_pos || neg.size() < n_neg) {
    throw StatsError("cannot draw " + std::to_string(n_pos) + " positives and " + std::to_string(n_neg) +
                     " negatives: " + std::to_string(pos.size()) + " positives and " + std::to_string(neg.size()) +
                     " negatives available");
  }

  std::unordered_map<std::string, const corpus::ReportRecord*> by_id;
  for (const auto& r : reports) by_id.emplace(r.id, &r);

  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::string, bool>> chosen;
  for (auto& id : draw(pos, n_pos, rng)) chosen.emplace_back(std::move(id), true);
  for (auto& id : draw(neg, n_neg, rng)) chosen.emplace_back(std::move(id), false);
  shuffle(chosen, rng);

  AdjudicationSample s;
  s.n_pos = n_pos;
  s.n_neg = n_neg;
  s.seed = seed;
  for (const auto& [id, verdict] : chosen) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw StatsError("report " + id + " has a verdict but is not in the corpus");
    s.items.push_back(SampleItem{id, corpus::canonical_sections(*it->second), verdict});
  }
  return s;
}

nlohmann::json presentation_payload(const SampleItem& item, std::size_t position, std::size_t total) {
  nlohmann::ordered_json sections = nlohmann::ordered_json::array();
  for (const auto& [heading, text] : item.sections) sections.push_back({{"heading", heading}, {"text", text}});
  nlohmann::ordered_json j;
  j["item_id"] = item.item_id;
  j["position"] = position;
  j["total"] = total;
  j["sections"] = sections;
  return j;
}

nlohmann::json sample_to_json(const AdjudicationSample& s) {
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& item : s.items) {
    nlohmann::ordered_json sections = nlohmann::ordered_json::array();
    for (const auto& [h, t] : item.sections) sections.push_back({{"heading", h}, {"text", t}});
    items.push_back({{"item_id", item.item_id},
                     {"hidden_model_verdict", item.hidden_model_verdict},
                     {"sections", sections}});
  }
  nlohmann::ordered_json j;
  j["format"] = "pfd-adjudication-sample";
  j["n_pos"] = s.n_pos;
  j["n_neg"] = s.n_neg;
  j["seed"] = s.seed;
  j["items"] = items;
  return j;
}

AdjudicationSample sample_from_json(const nlohmann::json& j) {
  AdjudicationSample s;
  try {
    s.n_pos = j.at("n_pos").get<std::size_t>();
    s.n_neg = j.at("n_neg").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& it : j.at("items")) {
      SampleItem item;
      item.item_id = it.at("item_id").get<std::string>();
      item.hidden_model_verdict = it.at("hidden_model_verdict").get<bool>();
      for (const auto& sec : it.at("sections")) {
        item.sections.emplace_back(sec.at("heading").get<std::string>(), sec.at("text").get<std::string>());
      }
      s.items.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sample file: ") + e.what());
  }
  return s;
}

void save_sample(const AdjudicationSample& s, const std::filesystem::path& path) {
  atomic_write(path, sample_to_json(s).dump(2) + "\n");
}

AdjudicationSample load_sample(const std::filesystem::path& path) {
  try {
    return sample_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace pfd::validation
