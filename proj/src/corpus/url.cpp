#include "pfd/corpus/url.hpp"

#include <vector>

#include "pfd/common/text.hpp"

namespace pfd::corpus {

std::optional<Url> Url::parse(std::string_view text) {
  const std::string t = trim(text);
  const auto scheme_end = t.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) return std::nullopt;
  Url u;
  u.scheme = to_lower(t.substr(0, scheme_end));
  std::string rest = t.substr(scheme_end + 3);
  if (auto hash = rest.find('#'); hash != std::string::npos) rest.resize(hash);
  const auto slash = rest.find_first_of("/?");
  std::string authority = rest.substr(0, slash);
  std::string path_query = slash == std::string::npos ? "/" : rest.substr(slash);
  if (authority.empty()) return std::nullopt;
  if (auto at = authority.rfind('@'); at != std::string::npos) authority = authority.substr(at + 1);
  if (auto colon = authority.rfind(':'); colon != std::string::npos) {
    try {
      u.port = std::stoi(authority.substr(colon + 1));
    } catch (...) {
      return std::nullopt;
    }
    authority.resize(colon);
  }
  u.host = to_lower(authority);
  if (auto q = path_query.find('?'); q != std::string::npos) {
    u.query = path_query.substr(q + 1);
    path_query.resize(q);
  }
  u.path = path_query.empty() || path_query[0] != '/' ? "/" + path_query : path_query;
  return u;
}

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  const bool default_port = port == 0 || (scheme == "http" && port == 80) ||
                            (scheme == "https" && port == 443);
  if (!default_port) out += ":" + std::to_string(port);
  return out;
}

std::string Url::target() const { return query.empty() ? path : path + "?" + query; }

std::string Url::str() const { return origin() + target(); }

namespace {

std::string remove_dot_segments(const std::string& path) {
  std::vector<std::string> out;
  const auto parts = split(path, '/');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p == ".") continue;
    if (p == "..") {
      if (out.size() > 1) out.pop_back();
      continue;
    }
    out.push_back(p);
  }
  std::string joined = join(out, "/");
  if (joined.empty() || joined[0] != '/') joined = "/" + joined;
  if ((path.ends_with("/.") || path.ends_with("/..")) && !joined.ends_with("/")) joined += "/";
  return joined;
}

}  // namespace

std::string resolve_url(std::string_view base_text, std::string_view ref_text) {
  std::string ref = trim(ref_text);
  if (auto hash = ref.find('#'); hash != std::string::npos) ref.resize(hash);
  if (ref.find("://") != std::string::npos) {
    auto u = Url::parse(ref);
    return u ? u->str() : ref;
  }
  auto base = Url::parse(base_text);
  if (!base) return ref;
  if (ref.starts_with("//")) {
    auto u = Url::parse(base->scheme + ":" + ref);
    return u ? u->str() : ref;
  }
  if (ref.empty()) return base->str();
  Url out = *base;
  std::string path = ref;
  out.query.clear();
  if (auto q = path.find('?'); q != std::string::npos) {
    out.query = path.substr(q + 1);
    path.resize(q);
  }
  if (path.empty()) {
    out.path = base->path;
    if (out.query.empty()) out.query = base->query;
  } else if (path[0] == '/') {
    out.path = remove_dot_segments(path);
  } else {
    const auto dir = base->path.substr(0, base->path.rfind('/') + 1);
    out.path = remove_dot_segments(dir + path);
  }
  return out.str();
}

std::string canonical_path(std::string_view url) {
  std::string path;
  if (auto u = Url::parse(url)) {
    path = u->path;
  } else {
    path = std::string(url);
    if (auto q = path.find_first_of("?#"); q != std::string::npos) path.resize(q);
  }
  path = to_lower(percent_decode(path));
  while (path.size() > 1 && path.back() == '/') path.pop_back();
  return path;
}

std::string canonical_url(std::string_view url) {
  auto u = Url::parse(url);
  if (!u) return std::string(url);
  const auto last = u->path.substr(u->path.rfind('/') + 1);
  if (!u->path.ends_with("/") && last.find('.') == std::string::npos) u->path += "/";
  return u->str();
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex(s[i + 1]) >= 0 && hex(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2])));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

}  // namespace pfd::corpus
