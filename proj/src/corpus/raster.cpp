#include "pfd/corpus/raster.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>

#include "pfd/common/log.hpp"

namespace pfd::corpus {

int points_to_pixels(double points, int dpi) {
  return static_cast<int>(std::lround(points / 72.0 * dpi));
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct PngWriteState {
  Bytes* out;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

struct PngReadState {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->in.size()) png_error(png, "truncated PNG");
  std::memcpy(data, st->in.data() + st->pos, len);
  st->pos += len;
}

}  // namespace

Bytes encode_png(const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0) throw RasterError("cannot encode empty image");
  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw RasterError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RasterError("PNG encode failed");
  }
  PngWriteState st{&out};
  png_set_write_fn(png, &st, png_write_cb, png_flush_cb);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    auto* row = const_cast<png_bytep>(image.pixels.data() +
                                      static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw RasterError("not a PNG");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RasterError("libpng init failed");
  }
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RasterError("PNG decode failed");
  }
  PngReadState st{bytes, 0};
  png_set_read_fn(png, &st, png_read_cb);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  const auto rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<png_size_t>(img.width)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw RasterError("unexpected PNG layout");
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        img.pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

// ---------------------------------------------------------------------------
// JPEG

namespace {

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

}  // namespace

GrayImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  GrayImage img;
  std::vector<std::uint8_t> row;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw RasterError("JPEG decode failed");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  const bool cmyk = cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK;
  if (!cmyk) cinfo.out_color_space = JCS_GRAYSCALE;
  jpeg_start_decompress(&cinfo);
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  const int comps = cinfo.output_components;
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  row.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(comps));
  while (cinfo.output_scanline < cinfo.output_height) {
    const auto y = cinfo.output_scanline;
    JSAMPROW rp = row.data();
    jpeg_read_scanlines(&cinfo, &rp, 1);
    auto* dst = img.pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width);
    if (comps == 1) {
      std::memcpy(dst, row.data(), static_cast<std::size_t>(img.width));
    } else {
      // Adobe CMYK JPEGs are stored inverted.
      for (int x = 0; x < img.width; ++x) {
        const auto* p = &row[static_cast<std::size_t>(x * comps)];
        const int c = 255 - p[0], m = 255 - p[1], yy = 255 - p[2], k = 255 - p[3];
        const int ink = std::min(255, (30 * c + 59 * m + 11 * yy) / 100 + k);
        dst[x] = static_cast<std::uint8_t>(255 - ink);
      }
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// PDF matrix [a b c d e f]: x' = a x + c y + e, y' = b x + d y + f.
struct Affine {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  // this then next
  Affine then(const Affine& n) const {
    return Affine{a * n.a + b * n.c,         a * n.b + b * n.d,         c * n.a + d * n.c,
                  c * n.b + d * n.d,         e * n.a + f * n.c + n.e,   e * n.b + f * n.d + n.f};
  }
  std::pair<double, double> apply(double x, double y) const {
    return {a * x + c * y + e, b * x + d * y + f};
  }
  std::optional<Affine> inverse() const {
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-12) return std::nullopt;
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    return Affine{ia, ib, ic, id, -(e * ia + f * ic), -(e * ib + f * id)};
  }
};

int component_count(const pdf::Document& doc, const pdf::Object* cs) {
  if (!cs) return 1;
  if (const auto* n = cs->as_name()) {
    if (n->value == "DeviceRGB" || n->value == "CalRGB" || n->value == "RGB") return 3;
    if (n->value == "DeviceCMYK" || n->value == "CMYK") return 4;
    return 1;
  }
  if (const auto* arr = cs->as_array(); arr && !arr->empty()) {
    const auto* family = doc.resolve((*arr)[0]).as_name();
    if (family && family->value == "ICCBased" && arr->size() > 1) {
      if (const auto* s = doc.resolve((*arr)[1]).as_stream()) {
        if (const auto* n = doc.lookup(s->dict, "N")) return static_cast<int>(n->as_int().value_or(1));
      }
    }
    if (family && family->value == "CalRGB") return 3;
  }
  return 1;
}

std::optional<GrayImage> decode_image_xobject(const pdf::Document& doc, const pdf::Stream& s) {
  if (const auto* mask = doc.lookup(s.dict, "ImageMask"); mask && std::get_if<bool>(&mask->value) &&
                                                         std::get<bool>(mask->value)) {
    return std::nullopt;
  }
  std::string filter_name;
  if (const auto* f = doc.lookup(s.dict, "Filter")) {
    if (const auto* n = f->as_name()) {
      filter_name = n->value;
    } else if (const auto* arr = f->as_array(); arr && !arr->empty()) {
      if (const auto* n = doc.resolve(arr->back()).as_name()) filter_name = n->value;
    }
  }
  const std::string data = doc.decode_stream(s);
  if (filter_name == "DCTDecode" || filter_name == "DCT") {
    return decode_jpeg(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
  }
  if (filter_name == "JPXDecode" || filter_name == "CCITTFaxDecode" || filter_name == "CCF" ||
      filter_name == "JBIG2Decode") {
    logger()->warn("image filter {} not supported; image skipped", filter_name);
    return std::nullopt;
  }
  const auto w = doc.lookup(s.dict, "Width") ? doc.lookup(s.dict, "Width")->as_int() : std::nullopt;
  const auto h = doc.lookup(s.dict, "Height") ? doc.lookup(s.dict, "Height")->as_int() : std::nullopt;
  if (!w || !h || *w <= 0 || *h <= 0 || *w > 20000 || *h > 20000) {
    throw pdf::PdfError("image XObject with bad dimensions");
  }
  const int bpc = doc.lookup(s.dict, "BitsPerComponent")
                      ? static_cast<int>(doc.lookup(s.dict, "BitsPerComponent")->as_int().value_or(8))
                      : 8;
  const int comps = component_count(doc, doc.lookup(s.dict, "ColorSpace"));
  if (bpc != 1 && bpc != 2 && bpc != 4 && bpc != 8) throw pdf::PdfError("unsupported bit depth");
  bool invert = false;
  if (const auto* dec = doc.lookup(s.dict, "Decode"); dec && dec->as_array() && dec->as_array()->size() >= 2) {
    invert = dec->as_array()->at(0).as_number().value_or(0) > dec->as_array()->at(1).as_number().value_or(1);
  }

  GrayImage img;
  img.width = static_cast<int>(*w);
  img.height = static_cast<int>(*h);
  img.pixels.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height), 255);
  const std::size_t row_bytes = (static_cast<std::size_t>(img.width) * static_cast<std::size_t>(comps * bpc) + 7) / 8;
  const int maxv = (1 << bpc) - 1;
  auto sample = [&](std::size_t rowoff, std::size_t idx) -> int {
    const std::size_t bit = idx * static_cast<std::size_t>(bpc);
    const std::size_t byte = rowoff + bit / 8;
    if (byte >= data.size()) return maxv;
    const auto v = static_cast<unsigned char>(data[byte]);
    if (bpc == 8) return v;
    const int shift = 8 - bpc - static_cast<int>(bit % 8);
    return (v >> shift) & maxv;
  };
  for (int y = 0; y < img.height; ++y) {
    const std::size_t rowoff = static_cast<std::size_t>(y) * row_bytes;
    for (int x = 0; x < img.width; ++x) {
      const std::size_t base = static_cast<std::size_t>(x) * static_cast<std::size_t>(comps);
      int gray;
      if (comps == 3) {
        gray = (299 * sample(rowoff, base) + 587 * sample(rowoff, base + 1) + 114 * sample(rowoff, base + 2)) / 1000;
        gray = gray * 255 / maxv;
      } else if (comps == 4) {
        const int ink = std::min(maxv, (30 * sample(rowoff, base) + 59 * sample(rowoff, base + 1) +
                                        11 * sample(rowoff, base + 2)) / 100 + sample(rowoff, base + 3));
        gray = (maxv - ink) * 255 / maxv;
      } else {
        gray = sample(rowoff, base) * 255 / maxv;
      }
      if (invert) gray = 255 - gray;
      img.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) + static_cast<std::size_t>(x)] =
          static_cast<std::uint8_t>(gray);
    }
  }
  return img;
}

void paint_image(GrayImage& canvas, const GrayImage& img, const Affine& image_to_device) {
  // The image occupies the unit square in its own space; row 0 is the top
  // (v = 1).
  const auto inv = image_to_device.inverse();
  if (!inv) return;
  double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
  for (auto [u, v] : std::array<std::pair<double, double>, 4>{{{0, 0}, {1, 0}, {0, 1}, {1, 1}}}) {
    auto [x, y] = image_to_device.apply(u, v);
    minx = std::min(minx, x);
    maxx = std::max(maxx, x);
    miny = std::min(miny, y);
    maxy = std::max(maxy, y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
  const int x1 = std::min(canvas.width, static_cast<int>(std::ceil(maxx)));
  const int y1 = std::min(canvas.height, static_cast<int>(std::ceil(maxy)));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      auto [u, v] = inv->apply(x + 0.5, y + 0.5);
      if (u < 0 || u >= 1 || v < 0 || v >= 1) continue;
      const int ix = std::min(img.width - 1, static_cast<int>(u * img.width));
      const int iy = std::min(img.height - 1, static_cast<int>((1.0 - v) * img.height));
      canvas.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(canvas.width) + static_cast<std::size_t>(x)] =
          img.at(ix, iy);
    }
  }
}

void render_content(const pdf::Document& doc, std::string_view content, const pdf::Dict& resources,
                    Affine ctm, const Affine& user_to_device, GrayImage& canvas, int depth) {
  if (depth > 8) return;
  std::vector<Affine> stack;
  for (const auto& op : pdf::parse_content(content)) {
    if (op.op == "q") {
      stack.push_back(ctm);
    } else if (op.op == "Q") {
      if (!stack.empty()) {
        ctm = stack.back();
        stack.pop_back();
      }
    } else if (op.op == "cm" && op.operands.size() == 6) {
      double v[6];
      bool ok = true;
      for (int i = 0; i < 6; ++i) {
        auto n = op.operands[static_cast<std::size_t>(i)].as_number();
        ok = ok && n.has_value();
        v[i] = n.value_or(0);
      }
      if (ok) ctm = Affine{v[0], v[1], v[2], v[3], v[4], v[5]}.then(ctm);
    } else if (op.op == "Do" && !op.operands.empty()) {
      const auto* name = op.operands.back().as_name();
      const auto* xobjs = doc.lookup(resources, "XObject");
      if (!name || !xobjs || !xobjs->as_dict()) continue;
      const auto* xo = doc.lookup(*xobjs->as_dict(), name->value);
      const auto* s = xo ? xo->as_stream() : nullptr;
      if (!s) continue;
      const auto* sub = doc.lookup(s->dict, "Subtype");
      const std::string subtype = sub && sub->as_name() ? sub->as_name()->value : "";
      if (subtype == "Image") {
        try {
          if (auto img = decode_image_xobject(doc, *s)) paint_image(canvas, *img, ctm.then(user_to_device));
        } catch (const RasterError& e) {
          logger()->warn("image {} skipped: {}", name->value, e.what());
        }
      } else if (subtype == "Form") {
        Affine form = ctm;
        if (const auto* m = doc.lookup(s->dict, "Matrix"); m && m->as_array() && m->as_array()->size() == 6) {
          double v[6];
          for (int i = 0; i < 6; ++i) v[i] = doc.resolve(m->as_array()->at(static_cast<std::size_t>(i))).as_number().value_or(0);
          form = Affine{v[0], v[1], v[2], v[3], v[4], v[5]}.then(ctm);
        }
        const auto* res = doc.lookup(s->dict, "Resources");
        render_content(doc, doc.decode_stream(*s), res && res->as_dict() ? *res->as_dict() : resources, form,
                       user_to_device, canvas, depth + 1);
      }
    }
  }
}

}  // namespace

GrayImage render_page(const pdf::Document& doc, const pdf::Page& page, int dpi) {
  const double scale = dpi / 72.0;
  const auto& mb = page.media_box;
  const int w0 = points_to_pixels(mb.width(), dpi);
  const int h0 = points_to_pixels(mb.height(), dpi);
  if (w0 <= 0 || h0 <= 0) throw pdf::PdfError("page has an empty media box");

  // User space to unrotated device space (y down).
  Affine to_device{scale, 0, 0, -scale, -mb.x0 * scale, mb.y1 * scale};
  GrayImage canvas;
  switch (page.rotate) {
    case 90:
      to_device = to_device.then(Affine{0, 1, -1, 0, static_cast<double>(h0), 0});
      canvas.width = h0;
      canvas.height = w0;
      break;
    case 180:
      to_device = to_device.then(Affine{-1, 0, 0, -1, static_cast<double>(w0), static_cast<double>(h0)});
      canvas.width = w0;
      canvas.height = h0;
      break;
    case 270:
      to_device = to_device.then(Affine{0, -1, 1, 0, 0, static_cast<double>(w0)});
      canvas.width = h0;
      canvas.height = w0;
      break;
    default:
      canvas.width = w0;
      canvas.height = h0;
  }
  canvas.pixels.assign(static_cast<std::size_t>(canvas.width) * static_cast<std::size_t>(canvas.height), 255);
  render_content(doc, doc.page_content(page), page.resources, Affine{}, to_device, canvas, 0);
  return canvas;
}

std::vector<PageImage> rasterize(std::span<const std::uint8_t> pdf_bytes, int dpi) {
  if (dpi < kMinDpi || dpi > kMaxDpi) {
    throw RasterError("dpi " + std::to_string(dpi) + " outside [72, 600]");
  }
  const auto doc = pdf::Document::parse(pdf_bytes);
  std::vector<PageImage> out;
  if (doc.page_count() == 0) {
    logger()->warn("PDF has no pages; nothing to rasterize");
    return out;
  }
  out.reserve(doc.page_count());
  for (std::size_t i = 0; i < doc.page_count(); ++i) {
    const GrayImage img = render_page(doc, doc.pages()[i], dpi);
    PageImage page;
    page.page_index = static_cast<int>(i);
    page.dpi = dpi;
    page.width_px = img.width;
    page.height_px = img.height;
    page.encoded = base64_encode(encode_png(img));
    out.push_back(std::move(page));
  }
  return out;
}

}  // namespace pfd::corpus
