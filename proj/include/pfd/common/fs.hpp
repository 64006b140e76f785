#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pfd/common/digest.hpp"
#include "pfd/common/error.hpp"

namespace pfd {

class IoError : public Error {
 public:
  using Error::Error;
};

class LockError : public Error {
 public:
  using Error::Error;
};

std::string read_text_file(const std::filesystem::path& path);
Bytes read_binary_file(const std::filesystem::path& path);

// Writes to a sibling temp file, flushes, then renames over `path`. Readers
// either see the old file or the complete new one.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

// Exclusive advisory lock implemented as an O_EXCL sidecar file
// (`<path>.lock`). A second holder gets LockError immediately.
class FileLock {
 public:
  explicit FileLock(std::filesystem::path target);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

  const std::filesystem::path& lock_path() const { return lock_path_; }

 private:
  std::filesystem::path lock_path_;
};

}  // namespace pfd
