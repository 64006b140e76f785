#pragma once

// Minimal PDF reader: enough object model to walk the page tree, read page
// geometry, pull the text layer of simple (non-CID) fonts and locate the
// image XObjects a scanner writes. It is deliberately not a general renderer.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pfd/common/digest.hpp"
#include "pfd/common/error.hpp"

namespace pfd::pdf {

class PdfError : public Error {
 public:
  using Error::Error;
};

// The input is a valid PDF we choose not to handle (encryption).
class UnsupportedPdfError : public PdfError {
 public:
  using PdfError::PdfError;
};

struct Object;

struct Ref {
  int num = 0;
  int gen = 0;
  bool operator==(const Ref&) const = default;
};

struct Name {
  std::string value;
  bool operator==(const Name&) const = default;
};

struct String {
  std::string bytes;
};

using Array = std::vector<Object>;

struct Dict {
  std::vector<std::pair<std::string, Object>> entries;

  const Object* find(std::string_view key) const;
  bool has(std::string_view key) const { return find(key) != nullptr; }
};

struct Stream {
  Dict dict;
  std::string raw;  // bytes between "stream" and "endstream", still encoded
};

struct Object {
  using Value = std::variant<std::monostate, bool, std::int64_t, double, Name, String,
                             Array, Dict, Ref, std::shared_ptr<const Stream>>;
  Value value;

  bool is_null() const { return std::holds_alternative<std::monostate>(value); }
  const Dict* as_dict() const;
  const Array* as_array() const;
  const Stream* as_stream() const;
  const Name* as_name() const { return std::get_if<Name>(&value); }
  const String* as_string() const { return std::get_if<String>(&value); }
  const Ref* as_ref() const { return std::get_if<Ref>(&value); }
  std::optional<double> as_number() const;
  std::optional<std::int64_t> as_int() const;
};

// Page boxes are in PDF user units (1/72 inch).
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

struct Page {
  Dict dict;
  Rect media_box;
  int rotate = 0;  // one of 0, 90, 180, 270
  Dict resources;

  // Displayed size in points, rotation applied.
  double display_width_pt() const;
  double display_height_pt() const;
};

class Document {
 public:
  // Throws PdfError on corrupt input, UnsupportedPdfError on encrypted input.
  static Document parse(std::span<const std::uint8_t> bytes);

  std::size_t page_count() const { return pages_.size(); }
  const std::vector<Page>& pages() const { return pages_; }

  // Follows indirect references (bounded depth).
  const Object& resolve(const Object& obj) const;
  const Object* lookup(const Dict& dict, std::string_view key) const;

  // Filters applied; DCTDecode is left in place for the image decoder.
  std::string decode_stream(const Stream& stream) const;
  std::string page_content(const Page& page) const;

  // Concatenated text layer of one page. Only simple fonts are understood;
  // bytes are treated as WinAnsi and emitted as UTF-8.
  std::string extract_text(const Page& page) const;

 private:
  std::map<int, Object> objects_;
  std::vector<Page> pages_;
  Dict trailer_;
};

// Content stream tokenizer output: operands followed by their operator.
struct Operation {
  std::string op;
  std::vector<Object> operands;
};

std::vector<Operation> parse_content(std::string_view content);

// zlib inflate (used for FlateDecode); exposed for the image decoder.
std::string inflate(std::string_view data);

}  // namespace pfd::pdf
