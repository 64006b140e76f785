#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pfd::corpus {

struct Url {
  std::string scheme;  // lower-case
  std::string host;    // lower-case
  int port = 0;        // 0 = scheme default
  std::string path;    // always starts with '/'
  std::string query;   // without '?'

  static std::optional<Url> parse(std::string_view text);

  // scheme://host[:port]
  std::string origin() const;
  // path[?query]
  std::string target() const;
  std::string str() const;
};

// RFC 3986 reference resolution, fragments dropped.
std::string resolve_url(std::string_view base, std::string_view ref);

// Lower-cased path with query, fragment and trailing slash removed. Hosts
// are ignored so a re-hosted archive keeps its identifiers.
std::string canonical_path(std::string_view url);

// Canonical form used to de-duplicate crawled links: lower-case scheme and
// host, no fragment, trailing slash enforced on paths without an extension.
std::string canonical_url(std::string_view url);

std::string percent_decode(std::string_view s);

}  // namespace pfd::corpus
