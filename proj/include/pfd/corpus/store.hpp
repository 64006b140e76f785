#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pfd/common/error.hpp"
#include "pfd/corpus/report.hpp"

namespace pfd::corpus {

// Corpus file layout (UTF-8, one JSON object per line):
//   line 1: {"format":"pfd-corpus","schema_version":1,"record_count":N}
//   lines 2..N+1: one ReportRecord each, keys in the order of kRecordFields.
inline constexpr int kCorpusSchemaVersion = 1;
inline constexpr const char* kCorpusFormat = "pfd-corpus";

class StoreError : public Error {
 public:
  StoreError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
  // 1-based line of the first problem; 0 when not line-specific.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MigrationRequiredError : public StoreError {
 public:
  MigrationRequiredError(const std::string& what, int found)
      : StoreError(what, 1), found_version_(found) {}
  int found_version() const { return found_version_; }

 private:
  int found_version_;
};

// Atomic (temp + rename) under an exclusive writer lock; a concurrent
// writer gets pfd::LockError and the existing file is left untouched.
void store_corpus(const std::vector<ReportRecord>& records, const std::filesystem::path& path);
std::vector<ReportRecord> load_corpus(const std::filesystem::path& path);

std::string serialize_record(const ReportRecord& r);
ReportRecord parse_record(std::string_view line);

}  // namespace pfd::corpus
