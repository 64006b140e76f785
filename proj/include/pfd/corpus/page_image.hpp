#pragma once

#include <string>

namespace pfd::corpus {

inline constexpr int kDefaultDpi = 200;

// One rendered page, PNG-encoded then base64'd for transport to a vision model.
struct PageImage {
  int page_index = 0;
  int dpi = kDefaultDpi;
  int width_px = 0;
  int height_px = 0;
  std::string encoded;  // base64 of a PNG
  std::string media_type = "image/png";
};

}  // namespace pfd::corpus
