#include "pfd/validation/adjudication.hpp"

#include <httplib.h>

#include <algorithm>
#include <set>

#include "pfd/common/fs.hpp"
#include "pfd/common/log.hpp"

namespace pfd::validation {

namespace {

ApiResponse error(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  return {status, extra};
}

std::optional<int> read_label(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i == 0 || i == 1) return static_cast<int>(i);
  }
  return std::nullopt;
}

}  // namespace

AdjudicationStore::AdjudicationStore(AdjudicationSample sample, std::vector<std::string> rater_ids,
                                     std::optional<std::filesystem::path> state_dir, bool majority)
    : sample_(std::move(sample)), raters_(std::move(rater_ids)), state_dir_(std::move(state_dir)), majority_(majority) {
  if (raters_.size() < 2) throw StatsError("adjudication needs at least 2 raters");
  if (std::set<std::string>(raters_.begin(), raters_.end()).size() != raters_.size()) {
    throw StatsError("rater ids must be unique");
  }
  if (!state_dir_) return;
  std::filesystem::create_directories(*state_dir_);
  const auto labels_path = *state_dir_ / "labels.csv";
  if (std::filesystem::exists(labels_path)) labels_ = parse_labels_csv(read_text_file(labels_path));
  const auto res_path = *state_dir_ / "resolutions.json";
  if (std::filesystem::exists(res_path)) {
    resolutions_ = nlohmann::json::parse(read_text_file(res_path)).get<std::map<std::string, int>>();
  }
  matrix_locked();  // rejects a state directory that does not fit this sample
}

RatingMatrix AdjudicationStore::matrix_locked() const {
  std::vector<std::string> items;
  for (const auto& it : sample_.items) items.push_back(it.item_id);
  return RatingMatrix::from_labels(labels_, items, raters_);
}

RatingMatrix AdjudicationStore::matrix() const {
  std::lock_guard lk(mu_);
  return matrix_locked();
}

std::vector<LabelRecord> AdjudicationStore::labels() const {
  std::lock_guard lk(mu_);
  return labels_;
}

void AdjudicationStore::persist_locked() const {
  if (!state_dir_) return;
  atomic_write(*state_dir_ / "labels.csv", format_labels_csv(labels_));
  atomic_write(*state_dir_ / "resolutions.json", nlohmann::json(resolutions_).dump(2) + "\n");
}

nlohmann::json AdjudicationStore::progress_locked() const {
  nlohmann::ordered_json per_rater = nlohmann::ordered_json::object();
  for (const auto& r : raters_) {
    per_rater[r] = std::count_if(labels_.begin(), labels_.end(), [&](const LabelRecord& l) { return l.rater_id == r; });
  }
  return {{"total", sample_.items.size()}, {"raters", per_rater}};
}

ApiResponse AdjudicationStore::progress() const {
  std::lock_guard lk(mu_);
  return {200, progress_locked()};
}

ApiResponse AdjudicationStore::next_task(const std::string& rater_id) const {
  std::lock_guard lk(mu_);
  if (std::find(raters_.begin(), raters_.end(), rater_id) == raters_.end()) {
    return error(403, "unknown rater '" + rater_id + "'");
  }
  std::set<std::string> done;
  for (const auto& l : labels_) {
    if (l.rater_id == rater_id) done.insert(l.item_id);
  }
  const std::size_t total = sample_.items.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (done.count(sample_.items[i].item_id)) continue;
    nlohmann::json task = presentation_payload(sample_.items[i], i + 1, total);
    task["completed"] = done.size();
    return {200, task};
  }
  return {200, {{"done", true}, {"completed", done.size()}, {"total", total}}};
}

ApiResponse AdjudicationStore::submit_label(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("item_id") || !body.contains("rater_id") || !body.contains("label") ||
      !body.at("item_id").is_string() || !body.at("rater_id").is_string()) {
    return error(400, "expected {item_id, rater_id, label}");
  }
  const auto label = read_label(body.at("label"));
  if (!label) return error(400, "label must be 0, 1, true or false");
  LabelRecord rec{body.at("item_id").get<std::string>(), body.at("rater_id").get<std::string>(), *label,
                  body.contains("note") && body.at("note").is_string() ? body.at("note").get<std::string>() : ""};

  std::lock_guard lk(mu_);
  if (std::find(raters_.begin(), raters_.end(), rec.rater_id) == raters_.end()) {
    return error(403, "unknown rater '" + rec.rater_id + "'");
  }
  const bool known_item = std::any_of(sample_.items.begin(), sample_.items.end(),
                                      [&](const SampleItem& it) { return it.item_id == rec.item_id; });
  if (!known_item) return error(404, "unknown item '" + rec.item_id + "'");
  const bool duplicate = std::any_of(labels_.begin(), labels_.end(), [&](const LabelRecord& l) {
    return l.item_id == rec.item_id && l.rater_id == rec.rater_id;
  });
  if (duplicate) return error(409, "label already submitted; labels are immutable");
  labels_.push_back(rec);
  persist_locked();
  return {201, {{"item_id", rec.item_id}, {"rater_id", rec.rater_id}, {"label", rec.label}}};
}

ApiResponse AdjudicationStore::disagreements() const {
  std::lock_guard lk(mu_);
  const RatingMatrix m = matrix_locked();
  if (!m.complete()) return error(409, "labelling is not complete", {{"progress", progress_locked()}});
  const Consensus c = Consensus::from_matrix(m, majority_);
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& d : c.disagreements()) {
    const auto it = std::find_if(sample_.items.begin(), sample_.items.end(),
                                 [&](const SampleItem& s) { return s.item_id == d.item_id; });
    nlohmann::ordered_json notes = nlohmann::ordered_json::object();
    for (const auto& l : labels_) {
      if (l.item_id == d.item_id && !l.note.empty()) notes[l.rater_id] = l.note;
    }
    nlohmann::ordered_json entry =
        presentation_payload(*it, static_cast<std::size_t>(it - sample_.items.begin()) + 1, sample_.items.size());
    entry["labels"] = d.labels;
    entry["notes"] = notes;
    if (auto r = resolutions_.find(d.item_id); r != resolutions_.end()) entry["resolution"] = r->second;
    items.push_back(std::move(entry));
  }
  std::size_t resolved = 0;
  for (const auto& d : c.disagreements()) resolved += resolutions_.count(d.item_id);
  return {200, {{"disagreements", items}, {"resolved", resolved}, {"total", c.disagreements().size()}}};
}

ApiResponse AdjudicationStore::submit_resolution(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("item_id") || !body.at("item_id").is_string() || !body.contains("label")) {
    return error(400, "expected {item_id, label}");
  }
  const auto label = read_label(body.at("label"));
  if (!label) return error(400, "label must be 0, 1, true or false");
  const std::string item = body.at("item_id").get<std::string>();

  std::lock_guard lk(mu_);
  const RatingMatrix m = matrix_locked();
  if (!m.complete()) return error(409, "labelling is not complete", {{"progress", progress_locked()}});
  Consensus c = Consensus::from_matrix(m, majority_);
  try {
    c.resolve(item, *label);
  } catch (const StatsError& e) {
    return error(404, e.what());
  }
  resolutions_[item] = *label;
  persist_locked();
  return {200, {{"item_id", item}, {"label", *label}, {"unresolved", c.unresolved().size()}}};
}

ApiResponse AdjudicationStore::stats() const {
  std::lock_guard lk(mu_);
  const RatingMatrix m = matrix_locked();
  if (!m.complete()) return error(409, "labelling is not complete", {{"progress", progress_locked()}});
  Consensus c = Consensus::from_matrix(m, majority_);
  for (const auto& [id, label] : resolutions_) c.resolve(id, label);
  if (!c.complete()) {
    return error(409, "consensus is not complete", {{"unresolved", c.unresolved()}});
  }
  const auto finals = c.final_labels();
  std::map<std::string, bool> model;
  for (const auto& it : sample_.items) model[it.item_id] = it.hidden_model_verdict;
  const ValidationReport v = validate_pipeline(model, finals);
  nlohmann::ordered_json j;
  j["reviewers"] = to_json(fleiss_kappa(m.cells));
  j["model_vs_consensus"] = to_json(v.agreement);
  j["confusion"] = {{"tp", v.confusion.tp}, {"fp", v.confusion.fp}, {"fn", v.confusion.fn}, {"tn", v.confusion.tn}};
  return {200, j};
}

struct AdjudicationServer::Impl {
  AdjudicationStore& store;
  httplib::Server server;
  explicit Impl(AdjudicationStore& s) : store(s) {}
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error&) {
    reply(res, {400, {{"error", "request body is not JSON"}}});
    return std::nullopt;
  }
}

}  // namespace

AdjudicationServer::AdjudicationServer(AdjudicationStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(store)) {
  auto& srv = impl_->server;
  auto& st = impl_->store;
  srv.Get("/api/tasks/next", [&st](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("rater")) return reply(res, {400, {{"error", "missing rater parameter"}}});
    reply(res, st.next_task(req.get_param_value("rater")));
  });
  srv.Post("/api/labels", [&st](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) reply(res, st.submit_label(*body));
  });
  srv.Get("/api/consensus/disagreements",
          [&st](const httplib::Request&, httplib::Response& res) { reply(res, st.disagreements()); });
  srv.Post("/api/consensus/resolutions", [&st](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) reply(res, st.submit_resolution(*body));
  });
  srv.Get("/api/progress", [&st](const httplib::Request&, httplib::Response& res) { reply(res, st.progress()); });
  srv.Get("/api/stats", [&st](const httplib::Request&, httplib::Response& res) { reply(res, st.stats()); });
  if (static_dir && !srv.set_mount_point("/", static_dir->string())) {
    logger()->warn("static UI directory {} not found; serving the API only", static_dir->string());
  }
}

AdjudicationServer::~AdjudicationServer() { stop(); }

int AdjudicationServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void AdjudicationServer::serve() { impl_->server.listen_after_bind(); }

void AdjudicationServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace pfd::validation
