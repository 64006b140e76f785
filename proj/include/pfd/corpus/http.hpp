#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "pfd/common/error.hpp"

namespace pfd::corpus {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

// Connection refused, DNS failure, timeout: no HTTP status was received.
class NetworkError : public Error {
 public:
  using Error::Error;
};

class HttpFetcher {
 public:
  virtual ~HttpFetcher() = default;
  // Throws NetworkError when no response arrives. HTTP errors come back as
  // a status code.
  virtual HttpResponse get(const std::string& url) = 0;
  // Number of get() calls that reached the network (or the archive).
  virtual std::size_t request_count() const = 0;
};

struct Politeness {
  double requests_per_second = 1.0;
  std::string user_agent = "pfd-text-to-table/0.1 (+research crawler)";
  std::chrono::seconds timeout{30};
};

// Live HTTP(S) with a global minimum interval between requests.
class LiveFetcher final : public HttpFetcher {
 public:
  explicit LiveFetcher(Politeness politeness);
  HttpResponse get(const std::string& url) override;
  std::size_t request_count() const override { return requests_; }

 private:
  Politeness politeness_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::atomic<std::size_t> requests_{0};
};

// Replays a recorded archive: <dir>/manifest.json maps each URL to a status,
// content type and body file. Unknown URLs answer 404. An entry may instead
// carry "error": "<text>" to simulate a network failure.
class ArchiveFetcher final : public HttpFetcher {
 public:
  explicit ArchiveFetcher(std::filesystem::path dir);
  HttpResponse get(const std::string& url) override;
  std::size_t request_count() const override { return requests_; }

 private:
  struct Entry {
    int status = 200;
    std::string content_type;
    std::filesystem::path file;
    std::string error;
  };
  std::filesystem::path dir_;
  std::map<std::string, Entry> entries_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace pfd::corpus
