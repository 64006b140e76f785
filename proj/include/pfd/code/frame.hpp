#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pfd/common/error.hpp"

namespace pfd::code {

struct FrameEntry {
  std::string id;
  std::string label;
  std::string definition;
  bool interpretive = false;  // definition is ours, not the source frame's
};

struct Theme {
  std::string id;
  std::string label;
  std::vector<FrameEntry> sub_themes;
};

class FrameError : public Error {
 public:
  using Error::Error;
};

struct CodingFrame {
  std::string name;
  std::vector<FrameEntry> addressees;
  std::vector<Theme> themes;

  std::size_t sub_theme_count() const;
  // Addressee categories plus sub-themes.
  std::size_t cardinality() const { return addressees.size() + sub_theme_count(); }
  // Sub-themes in frame order, themes flattened.
  std::vector<const FrameEntry*> sub_themes() const;
  // Digest of ids and order; vectors coded under different frames never mix.
  std::string fingerprint() const;

  // Throws FrameError naming the offending entry: duplicate or empty ids,
  // empty labels or definitions, a theme with no sub-themes, no addressees.
  void validate() const;
};

// YAML: name, addressee_categories[{id,label,definition,interpretive}],
// themes[{id,label,sub_themes[...]}].
CodingFrame parse_frame(const std::string& yaml_text);
CodingFrame load_frame(const std::filesystem::path& path);

}  // namespace pfd::code
