#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfd/common/digest.hpp"
#include "pfd/corpus/page_image.hpp"
#include "pfd/corpus/pdf.hpp"

namespace pfd::corpus {

inline constexpr int kMinDpi = 72;
inline constexpr int kMaxDpi = 600;

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0 = black

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

class RasterError : public Error {
 public:
  using Error::Error;
};

// Pixel size for a length in points at `dpi`, rounded to nearest.
int points_to_pixels(double points, int dpi);

// Renders every page in order. Only image XObjects are painted (white
// background elsewhere): this is the path for scanned pages, whose content is
// one or more page-sized images. Throws RasterError for dpi outside
// [72, 600], pdf::PdfError for corrupt input, pdf::UnsupportedPdfError for
// encrypted input.
std::vector<PageImage> rasterize(std::span<const std::uint8_t> pdf_bytes, int dpi = kDefaultDpi);

GrayImage render_page(const pdf::Document& doc, const pdf::Page& page, int dpi);

Bytes encode_png(const GrayImage& image);
// Any PNG colour type; converted to 8-bit gray. Throws RasterError.
GrayImage decode_png(std::span<const std::uint8_t> png);
// Baseline/progressive JPEG to 8-bit gray. Throws RasterError.
GrayImage decode_jpeg(std::span<const std::uint8_t> jpeg);

}  // namespace pfd::corpus
