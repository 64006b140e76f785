#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pfd {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Collapses runs of whitespace to one space and trims.
std::string collapse_whitespace(std::string_view s);

// Normal form used when checking that a quoted span occurs in a source text:
// whitespace collapsed, typographic quotes/dashes folded to ASCII.
std::string normalize_for_match(std::string_view s);

}  // namespace pfd
