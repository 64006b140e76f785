#include "pfd/screen/screener.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>

#include "pfd/common/csv.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/log.hpp"
#include "pfd/common/parallel.hpp"
#include "pfd/common/text.hpp"

namespace pfd::screen {

void ScreenQuestion::validate() const {
  if (trim(id).empty()) throw ConfigError("screen question has no id");
  if (trim(question_text).empty()) throw ConfigError("screen question '" + id + "' has empty question_text");
}

ScreenQuestion parse_question(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("question file: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("question file must be a mapping");
  ScreenQuestion q;
  try {
    q.id = root["id"].as<std::string>("");
    q.question_text = root["question_text"].as<std::string>("");
    q.inference_guidance = root["inference_guidance"].as<std::string>("");
    q.include_evidence = root["include_evidence"].as<bool>(false);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("question file: ") + e.what());
  }
  q.validate();
  return q;
}

ScreenQuestion load_question(const std::filesystem::path& path) { return parse_question(read_text_file(path)); }

llm::SchemaSpec screen_schema(bool include_evidence) {
  std::vector<llm::FieldSpec> fields{
      {"match", llm::FieldKind::boolean, true, "true when the report answers the question positively"}};
  if (include_evidence) {
    fields.push_back({"evidence", llm::FieldKind::list_of_text, true,
                      "Short passages copied verbatim from the report that support the answer"});
  }
  return llm::SchemaSpec("screen_verdict", std::move(fields));
}

std::string screen_system_prompt(const ScreenQuestion& q) {
  std::string s =
      "You screen coroners' Prevention of Future Deaths reports for a research study.\n"
      "Read the whole report and answer one yes/no question about it.\n\n"
      "Question: " +
      trim(q.question_text) + "\n";
  if (!trim(q.inference_guidance).empty()) s += "\nGuidance: " + trim(q.inference_guidance) + "\n";
  s += "\nReply with a JSON object. Set \"match\" to true or false.";
  if (q.include_evidence) {
    s += " Set \"evidence\" to a list of short passages copied exactly from the report that support "
         "your answer. Copy them character for character; do not paraphrase.";
  }
  return s;
}

std::string screen_user_prompt(const corpus::ReportRecord& report) {
  return "Report " + report.id + "\n\n" + corpus::render_report_text(report);
}

std::vector<std::string> verify_spans(const std::vector<std::string>& spans, const std::string& source,
                                      std::vector<std::string>* dropped) {
  const std::string haystack = normalize_for_match(source);
  std::vector<std::string> kept;
  for (const auto& span : spans) {
    const std::string needle = normalize_for_match(span);
    if (!needle.empty() && haystack.find(needle) != std::string::npos) {
      kept.push_back(span);
    } else if (dropped) {
      dropped->push_back(span);
    }
  }
  return kept;
}

namespace {

std::vector<std::string> evidence_of(const nlohmann::json& parsed) {
  std::vector<std::string> out;
  if (parsed.contains("evidence")) {
    for (const auto& e : parsed.at("evidence")) out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

ScreenVerdict screen_report(const corpus::ReportRecord& report, const ScreenQuestion& q, llm::Gateway& gateway) {
  ScreenVerdict v;
  v.report_id = report.id;
  v.question_id = q.id;
  const std::string source = corpus::section_text(report);
  const auto schema = screen_schema(q.include_evidence);

  llm::SemanticCheck check;
  if (q.include_evidence) {
    check = [&source](const nlohmann::json& parsed) -> std::optional<std::string> {
      if (!parsed.at("match").get<bool>()) return std::nullopt;
      if (verify_spans(evidence_of(parsed), source).empty()) {
        return "match is true but no evidence passage occurs verbatim in the report";
      }
      return std::nullopt;
    };
  }

  try {
    const auto result =
        gateway.complete_structured(screen_system_prompt(q), screen_user_prompt(report), {}, schema, check);
    v.verdict = result.parsed.at("match").get<bool>();
    v.attempts = result.attempts;
    if (q.include_evidence) {
      std::vector<std::string> dropped;
      v.evidence = verify_spans(evidence_of(result.parsed), source, &dropped);
      for (const auto& d : dropped) {
        logger()->info("report {}: dropped unverifiable evidence span \"{}\"", report.id, d);
      }
    }
  } catch (const llm::SchemaViolationError& e) {
    v.attempts = e.attempts();
    v.error = e.what();
    if (!e.errors().empty()) v.error += " (last: " + e.errors().back() + ")";
  } catch (const llm::TransportError& e) {
    v.error = e.what();
  }
  if (v.unscreenable()) logger()->warn("report {} unscreenable: {}", report.id, v.error);
  return v;
}

ScreenSummary summarize(const std::vector<ScreenVerdict>& verdicts) {
  ScreenSummary s;
  for (const auto& v : verdicts) {
    if (!v.verdict) {
      ++s.unscreenable;
    } else if (*v.verdict) {
      ++s.positives;
    } else {
      ++s.negatives;
    }
  }
  return s;
}

ScreenRun screen_corpus(const std::vector<corpus::ReportRecord>& corpus, const ScreenQuestion& q,
                        llm::Gateway& gateway, int workers) {
  q.validate();
  std::vector<const corpus::ReportRecord*> eligible;
  ScreenRun run;
  for (const auto& r : corpus) {
    if (r.extraction_complete) {
      eligible.push_back(&r);
    } else {
      ++run.skipped_incomplete;
    }
  }
  std::sort(eligible.begin(), eligible.end(), [](auto* a, auto* b) { return a->id < b->id; });
  run.verdicts.resize(eligible.size());
  parallel_for(eligible.size(), static_cast<std::size_t>(std::max(1, workers)),
               [&](std::size_t i) { run.verdicts[i] = screen_report(*eligible[i], q, gateway); });
  run.summary = summarize(run.verdicts);
  return run;
}

std::string join_spans(const std::vector<std::string>& spans) {
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) out += '|';
    for (char c : spans[i]) {
      if (c == '|' || c == '\\') out += '\\';
      out += c;
    }
  }
  return out;
}

std::vector<std::string> split_spans(const std::string& joined) {
  std::vector<std::string> out;
  if (joined.empty()) return out;
  std::string cur;
  for (std::size_t i = 0; i < joined.size(); ++i) {
    const char c = joined[i];
    if (c == '\\' && i + 1 < joined.size()) {
      cur += joined[++i];
    } else if (c == '|') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string format_verdicts_csv(const std::vector<ScreenVerdict>& verdicts) {
  std::vector<csv::Row> rows{{"report_id", "verdict", "evidence", "attempts"}};
  for (const auto& v : verdicts) {
    rows.push_back({v.report_id, !v.verdict ? "unscreenable" : (*v.verdict ? "true" : "false"),
                    join_spans(v.evidence), std::to_string(v.attempts)});
  }
  return csv::format(rows);
}

std::vector<ScreenVerdict> parse_verdicts_csv(const std::string& text, const std::string& question_id) {
  csv::Table table(csv::parse(text));
  std::vector<ScreenVerdict> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    ScreenVerdict v;
    v.report_id = table.at(i, "report_id");
    v.question_id = question_id;
    const std::string& verdict = table.at(i, "verdict");
    if (verdict == "true") {
      v.verdict = true;
    } else if (verdict == "false") {
      v.verdict = false;
    } else if (verdict != "unscreenable") {
      throw ParseError("screen CSV row " + std::to_string(i + 2) + ": bad verdict '" + verdict + "'");
    }
    v.evidence = split_spans(table.at(i, "evidence"));
    try {
      v.attempts = std::stoi(table.at(i, "attempts"));
    } catch (const std::exception&) {
      throw ParseError("screen CSV row " + std::to_string(i + 2) + ": bad attempts value");
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace pfd::screen
