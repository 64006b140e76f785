#include "pfd/code/frame.hpp"

#include <yaml-cpp/yaml.h>

#include <set>

#include "pfd/common/digest.hpp"
#include "pfd/common/fs.hpp"
#include "pfd/common/text.hpp"

namespace pfd::code {

std::size_t CodingFrame::sub_theme_count() const {
  std::size_t n = 0;
  for (const auto& t : themes) n += t.sub_themes.size();
  return n;
}

std::vector<const FrameEntry*> CodingFrame::sub_themes() const {
  std::vector<const FrameEntry*> out;
  for (const auto& t : themes) {
    for (const auto& s : t.sub_themes) out.push_back(&s);
  }
  return out;
}

std::string CodingFrame::fingerprint() const {
  std::string material = "addressees";
  for (const auto& a : addressees) material += "\n" + a.id;
  for (const auto& t : themes) {
    material += "\ntheme " + t.id;
    for (const auto& s : t.sub_themes) material += "\n" + s.id;
  }
  return sha256_hex(material).substr(0, 16);
}

void CodingFrame::validate() const {
  std::set<std::string> ids;
  auto check_entry = [&](const FrameEntry& e, const std::string& where) {
    if (trim(e.id).empty()) throw FrameError(where + " has an empty id");
    if (!ids.insert(e.id).second) throw FrameError("duplicate id '" + e.id + "' (" + where + ")");
    if (trim(e.label).empty()) throw FrameError("'" + e.id + "' has an empty label");
    if (trim(e.definition).empty()) throw FrameError("'" + e.id + "' has an empty definition");
  };
  if (addressees.empty()) throw FrameError("frame has no addressee categories");
  if (themes.empty()) throw FrameError("frame has no themes");
  for (std::size_t i = 0; i < addressees.size(); ++i) {
    check_entry(addressees[i], "addressee category #" + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < themes.size(); ++i) {
    const Theme& t = themes[i];
    if (trim(t.id).empty()) throw FrameError("theme #" + std::to_string(i + 1) + " has an empty id");
    if (!ids.insert(t.id).second) throw FrameError("duplicate id '" + t.id + "' (theme)");
    if (trim(t.label).empty()) throw FrameError("theme '" + t.id + "' has an empty label");
    if (t.sub_themes.empty()) throw FrameError("theme '" + t.id + "' has no sub-themes");
    for (std::size_t j = 0; j < t.sub_themes.size(); ++j) {
      check_entry(t.sub_themes[j], "sub-theme #" + std::to_string(j + 1) + " of theme '" + t.id + "'");
    }
  }
}

namespace {

FrameEntry read_entry(const YAML::Node& n) {
  if (!n.IsMap()) throw FrameError("frame entry is not a mapping");
  FrameEntry e;
  e.id = n["id"].as<std::string>("");
  e.label = n["label"].as<std::string>("");
  e.definition = trim(n["definition"].as<std::string>(""));
  e.interpretive = n["interpretive"].as<bool>(false);
  return e;
}

}  // namespace

CodingFrame parse_frame(const std::string& yaml_text) {
  CodingFrame f;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    if (!root.IsMap()) throw FrameError("frame file must be a mapping");
    f.name = root["name"].as<std::string>("");
    for (const auto& a : root["addressee_categories"]) f.addressees.push_back(read_entry(a));
    for (const auto& t : root["themes"]) {
      Theme theme;
      theme.id = t["id"].as<std::string>("");
      theme.label = t["label"].as<std::string>("");
      for (const auto& s : t["sub_themes"]) theme.sub_themes.push_back(read_entry(s));
      f.themes.push_back(std::move(theme));
    }
  } catch (const YAML::Exception& e) {
    throw FrameError(std::string("frame file: ") + e.what());
  }
  f.validate();
  return f;
}

CodingFrame load_frame(const std::filesystem::path& path) {
  try {
    return parse_frame(read_text_file(path));
  } catch (const FrameError& e) {
    throw FrameError(path.string() + ": " + e.what());
  }
}

}  // namespace pfd::code
