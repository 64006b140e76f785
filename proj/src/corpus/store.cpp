#include "pfd/corpus/store.hpp"

#include <nlohmann/json.hpp>

#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"

namespace pfd::corpus {

using ojson = nlohmann::ordered_json;

std::string serialize_record(const ReportRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["source_url"] = r.source_url;
  j["published_date"] = r.published_date ? ojson(r.published_date->iso()) : ojson(nullptr);
  j["coroner_name"] = r.coroner_name;
  j["coroner_area"] = r.coroner_area;
  j["recipients"] = r.recipients;
  j["section_investigation"] = r.section_investigation;
  j["section_circumstances"] = r.section_circumstances;
  j["section_concerns"] = r.section_concerns;
  j["section_action"] = r.section_action;
  j["extraction_method"] = std::string(to_string(r.extraction_method));
  j["page_count"] = r.page_count;
  j["extraction_complete"] = r.extraction_complete;
  j["missing_fields"] = r.missing_fields;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ReportRecord parse_record(std::string_view line) {
  const auto j = ojson::parse(line);
  ReportRecord r;
  r.id = j.at("id").get<std::string>();
  r.source_url = j.at("source_url").get<std::string>();
  if (!j.at("published_date").is_null()) {
    auto d = parse_date(j.at("published_date").get<std::string>());
    if (!d) throw ParseError("bad published_date");
    r.published_date = d;
  }
  r.coroner_name = j.at("coroner_name").get<std::string>();
  r.coroner_area = j.at("coroner_area").get<std::string>();
  r.recipients = j.at("recipients").get<std::vector<std::string>>();
  r.section_investigation = j.at("section_investigation").get<std::string>();
  r.section_circumstances = j.at("section_circumstances").get<std::string>();
  r.section_concerns = j.at("section_concerns").get<std::string>();
  r.section_action = j.at("section_action").get<std::string>();
  r.extraction_method = extraction_method_from_string(j.at("extraction_method").get<std::string>());
  r.page_count = j.at("page_count").get<int>();
  if (r.page_count < 0) throw ParseError("negative page_count");
  r.extraction_complete = j.at("extraction_complete").get<bool>();
  r.missing_fields = j.at("missing_fields").get<std::vector<std::string>>();
  return r;
}

void store_corpus(const std::vector<ReportRecord>& records, const std::filesystem::path& path) {
  FileLock lock(path);
  ojson header;
  header["format"] = kCorpusFormat;
  header["schema_version"] = kCorpusSchemaVersion;
  header["record_count"] = records.size();
  std::string out = header.dump() + "\n";
  for (const auto& r : records) {
    out += serialize_record(r);
    out += "\n";
  }
  atomic_write(path, out);
}

std::vector<ReportRecord> load_corpus(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw StoreError("corpus file is empty", 1);

  ojson header;
  try {
    header = ojson::parse(lines[0]);
  } catch (const nlohmann::json::exception& e) {
    throw StoreError(std::string("line 1: bad header: ") + e.what(), 1);
  }
  if (!header.is_object() || header.value("format", "") != kCorpusFormat) {
    throw StoreError("line 1: not a corpus file", 1);
  }
  const int version = header.value("schema_version", 0);
  if (version != kCorpusSchemaVersion) {
    throw MigrationRequiredError("corpus schema version " + std::to_string(version) +
                                     " requires migration to version " +
                                     std::to_string(kCorpusSchemaVersion),
                                 version);
  }
  const auto expected = header.value("record_count", std::size_t{0});

  std::vector<ReportRecord> records;
  records.reserve(expected);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const bool last = i + 1 == lines.size();
    if (last && lines[i].empty()) break;  // trailing newline
    try {
      if (last) throw ParseError("record not newline-terminated (file truncated)");
      records.push_back(parse_record(lines[i]));
    } catch (const std::exception& e) {
      throw StoreError("line " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
  }
  if (records.size() != expected) {
    throw StoreError("expected " + std::to_string(expected) + " records, found " +
                         std::to_string(records.size()) + "; file truncated after line " +
                         std::to_string(records.size() + 1),
                     records.size() + 2);
  }
  return records;
}

}  // namespace pfd::corpus
