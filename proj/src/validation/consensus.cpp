#include "pfd/validation/consensus.hpp"

#include <algorithm>
#include <set>

#include "pfd/common/csv.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"

namespace pfd::validation {

std::string format_labels_csv(const std::vector<LabelRecord>& labels) {
  std::vector<csv::Row> rows{{"item_id", "rater_id", "label", "note"}};
  for (const auto& l : labels) rows.push_back({l.item_id, l.rater_id, std::to_string(l.label), l.note});
  return csv::format(rows);
}

std::vector<LabelRecord> parse_labels_csv(const std::string& text) {
  csv::Table t(csv::parse(text));
  const bool has_note = t.has_column("note");
  std::vector<LabelRecord> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    LabelRecord l;
    l.item_id = t.at(i, "item_id");
    l.rater_id = t.at(i, "rater_id");
    const std::string v = trim(t.at(i, "label"));
    if (v == "1" || v == "true") {
      l.label = 1;
    } else if (v == "0" || v == "false") {
      l.label = 0;
    } else {
      throw ParseError("labels CSV row " + std::to_string(i + 2) + ": label '" + v + "' is not 0 or 1");
    }
    if (has_note) l.note = t.at(i, "note");
    out.push_back(std::move(l));
  }
  return out;
}

bool RatingMatrix::complete() const {
  return std::all_of(cells.begin(), cells.end(), [](const auto& row) {
    return std::all_of(row.begin(), row.end(), [](const auto& c) { return c.has_value(); });
  });
}

std::vector<int> RatingMatrix::column(std::size_t rater) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i].at(rater);
    if (!c) throw StatsError("rater " + rater_ids.at(rater) + " has not labelled " + item_ids[i]);
    out.push_back(*c);
  }
  return out;
}

RatingMatrix RatingMatrix::from_labels(const std::vector<LabelRecord>& labels, std::vector<std::string> item_ids,
                                       std::vector<std::string> rater_ids) {
  const bool fixed_items = !item_ids.empty();
  const bool fixed_raters = !rater_ids.empty();
  if (!fixed_items || !fixed_raters) {
    std::set<std::string> items;
    std::set<std::string> raters;
    for (const auto& l : labels) {
      items.insert(l.item_id);
      raters.insert(l.rater_id);
    }
    if (!fixed_items) item_ids.assign(items.begin(), items.end());
    if (!fixed_raters) rater_ids.assign(raters.begin(), raters.end());
  }
  if (rater_ids.size() < 2) throw StatsError("a rating matrix needs at least 2 raters");
  std::map<std::string, std::size_t> item_pos;
  std::map<std::string, std::size_t> rater_pos;
  for (std::size_t i = 0; i < item_ids.size(); ++i) item_pos[item_ids[i]] = i;
  for (std::size_t r = 0; r < rater_ids.size(); ++r) rater_pos[rater_ids[r]] = r;

  RatingMatrix m;
  m.item_ids = std::move(item_ids);
  m.rater_ids = std::move(rater_ids);
  m.cells.assign(m.item_ids.size(), std::vector<std::optional<int>>(m.rater_ids.size()));
  for (const auto& l : labels) {
    auto ii = item_pos.find(l.item_id);
    auto rr = rater_pos.find(l.rater_id);
    if (ii == item_pos.end()) throw StatsError("label for unknown item " + l.item_id);
    if (rr == rater_pos.end()) throw StatsError("label from unknown rater " + l.rater_id);
    if (l.label != 0 && l.label != 1) throw StatsError("label must be 0 or 1");
    auto& cell = m.cells[ii->second][rr->second];
    if (cell) throw StatsError("rater " + l.rater_id + " labelled " + l.item_id + " twice");
    cell = l.label;
  }
  return m;
}

Consensus Consensus::from_matrix(const RatingMatrix& matrix, bool majority) {
  if (!matrix.complete()) throw IncompleteConsensusError("rating matrix is incomplete; consensus needs every label");
  Consensus c;
  for (std::size_t i = 0; i < matrix.item_ids.size(); ++i) {
    int ones = 0;
    for (const auto& cell : matrix.cells[i]) ones += *cell;
    const int m = static_cast<int>(matrix.rater_ids.size());
    if (ones == 0 || ones == m) {
      c.agreed_[matrix.item_ids[i]] = ones == m ? 1 : 0;
    } else if (majority && 2 * ones != m) {
      c.agreed_[matrix.item_ids[i]] = 2 * ones > m ? 1 : 0;
    } else {
      Disagreement d{matrix.item_ids[i], {}};
      for (std::size_t r = 0; r < matrix.rater_ids.size(); ++r) d.labels[matrix.rater_ids[r]] = *matrix.cells[i][r];
      c.disagreements_.push_back(std::move(d));
    }
  }
  return c;
}

std::vector<std::string> Consensus::unresolved() const {
  std::vector<std::string> out;
  for (const auto& d : disagreements_) {
    if (!resolutions_.count(d.item_id)) out.push_back(d.item_id);
  }
  return out;
}

void Consensus::resolve(const std::string& item_id, int label) {
  if (label != 0 && label != 1) throw StatsError("resolution label must be 0 or 1");
  const bool known = std::any_of(disagreements_.begin(), disagreements_.end(),
                                 [&](const Disagreement& d) { return d.item_id == item_id; });
  if (!known) throw StatsError("item " + item_id + " is not a disagreement");
  resolutions_[item_id] = label;
}

std::map<std::string, int> Consensus::final_labels() const {
  const auto open = unresolved();
  if (!open.empty()) {
    throw IncompleteConsensusError(std::to_string(open.size()) + " disagreement(s) unresolved: " + join(open, ", "));
  }
  auto out = agreed_;
  for (const auto& [id, label] : resolutions_) out[id] = label;
  return out;
}

nlohmann::json Consensus::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "pfd-consensus";
  j["agreed"] = agreed_;
  auto ds = nlohmann::ordered_json::array();
  for (const auto& d : disagreements_) ds.push_back({{"item_id", d.item_id}, {"labels", d.labels}});
  j["disagreements"] = ds;
  j["resolutions"] = resolutions_;
  return j;
}

Consensus Consensus::from_json(const nlohmann::json& j) {
  Consensus c;
  try {
    c.agreed_ = j.at("agreed").get<std::map<std::string, int>>();
    for (const auto& d : j.at("disagreements")) {
      c.disagreements_.push_back({d.at("item_id").get<std::string>(), d.at("labels").get<std::map<std::string, int>>()});
    }
    for (const auto& [id, label] : j.at("resolutions").get<std::map<std::string, int>>()) c.resolve(id, label);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("consensus file: ") + e.what());
  }
  return c;
}

void save_consensus(const Consensus& c, const std::filesystem::path& path) {
  atomic_write(path, c.to_json().dump(2) + "\n");
}

Consensus load_consensus(const std::filesystem::path& path) {
  try {
    return Consensus::from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ValidationReport validate_pipeline(const std::map<std::string, bool>& model_verdicts,
                                   const std::map<std::string, int>& consensus_labels, KappaSe se) {
  std::vector<std::string> orphans;
  for (const auto& [id, v] : model_verdicts) {
    if (!consensus_labels.count(id)) orphans.push_back(id + " (model only)");
  }
  for (const auto& [id, v] : consensus_labels) {
    if (!model_verdicts.count(id)) orphans.push_back(id + " (consensus only)");
  }
  if (!orphans.empty()) throw StatsError("unaligned report ids: " + join(orphans, ", "));

  ValidationReport r;
  std::vector<int> model;
  std::vector<int> truth;
  for (const auto& [id, v] : model_verdicts) {
    const int t = consensus_labels.at(id);
    model.push_back(v ? 1 : 0);
    truth.push_back(t);
    if (v && t) ++r.confusion.tp;
    else if (v && !t) ++r.confusion.fp;
    else if (!v && t) ++r.confusion.fn;
    else ++r.confusion.tn;
  }
  r.agreement = cohen_kappa(model, truth, se);
  return r;
}

nlohmann::json to_json(const AgreementReport& r) {
  nlohmann::ordered_json j;
  j["kappa"] = r.kappa;
  j["p_observed"] = r.p_observed;
  j["p_expected"] = r.p_expected;
  j["std_error"] = r.std_error;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["n_items"] = r.n_items;
  j["degenerate"] = r.degenerate;
  return j;
}

}  // namespace pfd::validation
