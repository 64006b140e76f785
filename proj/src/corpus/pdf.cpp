#include "pfd/corpus/pdf.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <set>

namespace pfd::pdf {

// ---------------------------------------------------------------------------
// Object accessors

const Object* Dict::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Dict* Object::as_dict() const {
  if (auto* d = std::get_if<Dict>(&value)) return d;
  if (auto* s = std::get_if<std::shared_ptr<const Stream>>(&value)) return &(*s)->dict;
  return nullptr;
}

const Array* Object::as_array() const { return std::get_if<Array>(&value); }

const Stream* Object::as_stream() const {
  if (auto* s = std::get_if<std::shared_ptr<const Stream>>(&value)) return s->get();
  return nullptr;
}

std::optional<double> Object::as_number() const {
  if (auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&value)) return *d;
  return std::nullopt;
}

std::optional<std::int64_t> Object::as_int() const {
  if (auto* i = std::get_if<std::int64_t>(&value)) return *i;
  if (auto* d = std::get_if<double>(&value)) return static_cast<std::int64_t>(std::llround(*d));
  return std::nullopt;
}

double Page::display_width_pt() const {
  return (rotate == 90 || rotate == 270) ? media_box.height() : media_box.width();
}

double Page::display_height_pt() const {
  return (rotate == 90 || rotate == 270) ? media_box.width() : media_box.height();
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

bool is_ws(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}

bool is_delim(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
         c == '}' || c == '/' || c == '%';
}

bool is_regular(char c) { return !is_ws(c) && !is_delim(c); }

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

struct Keyword {
  std::string word;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src, std::size_t pos = 0) : src_(src), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  bool eof() {
    skip_ws();
    return pos_ >= src_.size();
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (is_ws(c)) {
        ++pos_;
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  // Parses one object. Bare keywords (content operators, "obj", "R" misuse)
  // come back through `keyword` when non-null, otherwise they are an error.
  Object parse_object(Keyword* keyword = nullptr, int depth = 0) {
    if (depth > 64) throw PdfError("object nesting too deep");
    skip_ws();
    if (pos_ >= src_.size()) throw PdfError("unexpected end of data");
    const char c = src_[pos_];
    if (c == '/') return Object{parse_name()};
    if (c == '(') return Object{parse_literal_string()};
    if (c == '<') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '<') return parse_dict_or_stream(depth);
      return Object{parse_hex_string()};
    }
    if (c == '[') {
      ++pos_;
      Array arr;
      while (true) {
        skip_ws();
        if (pos_ >= src_.size()) throw PdfError("unterminated array");
        if (src_[pos_] == ']') {
          ++pos_;
          break;
        }
        arr.push_back(parse_object(nullptr, depth + 1));
      }
      return Object{std::move(arr)};
    }
    if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      return parse_number_or_ref();
    }
    if (c == ')' || c == '>' || c == ']' || c == '{' || c == '}') {
      throw PdfError(std::string("unexpected delimiter '") + c + "'");
    }
    std::string word = read_regular();
    if (word == "true") return Object{true};
    if (word == "false") return Object{false};
    if (word == "null") return Object{};
    if (keyword) {
      keyword->word = std::move(word);
      return Object{};
    }
    throw PdfError("unexpected keyword '" + word + "'");
  }

  std::string read_regular() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_regular(src_[pos_])) ++pos_;
    if (pos_ == start) throw PdfError("empty token");
    return std::string(src_.substr(start, pos_ - start));
  }

  bool match_keyword(std::string_view kw) {
    skip_ws();
    if (src_.substr(pos_, kw.size()) != kw) return false;
    const std::size_t end = pos_ + kw.size();
    if (end < src_.size() && is_regular(src_[end])) return false;
    pos_ = end;
    return true;
  }

 private:
  Name parse_name() {
    ++pos_;  // '/'
    std::string out;
    while (pos_ < src_.size() && is_regular(src_[pos_])) {
      const char c = src_[pos_];
      if (c == '#' && pos_ + 2 < src_.size() && hex_val(src_[pos_ + 1]) >= 0 &&
          hex_val(src_[pos_ + 2]) >= 0) {
        out.push_back(static_cast<char>(hex_val(src_[pos_ + 1]) * 16 + hex_val(src_[pos_ + 2])));
        pos_ += 3;
      } else {
        out.push_back(c);
        ++pos_;
      }
    }
    return Name{std::move(out)};
  }

  String parse_literal_string() {
    ++pos_;  // '('
    std::string out;
    int depth = 1;
    while (pos_ < src_.size()) {
      char c = src_[pos_++];
      if (c == '\\') {
        if (pos_ >= src_.size()) break;
        char e = src_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 't': out.push_back('\t'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case '\r':
            if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
            break;
          case '\n': break;
          default:
            if (e >= '0' && e <= '7') {
              int v = e - '0';
              for (int k = 0; k < 2 && pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '7';
                   ++k) {
                v = v * 8 + (src_[pos_++] - '0');
              }
              out.push_back(static_cast<char>(v & 0xff));
            } else {
              out.push_back(e);
            }
        }
        continue;
      }
      if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (--depth == 0) return String{std::move(out)};
      }
      out.push_back(c);
    }
    throw PdfError("unterminated string");
  }

  String parse_hex_string() {
    ++pos_;  // '<'
    std::string out;
    int hi = -1;
    while (pos_ < src_.size()) {
      const char c = src_[pos_++];
      if (c == '>') {
        if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
        return String{std::move(out)};
      }
      if (is_ws(c)) continue;
      const int v = hex_val(c);
      if (v < 0) throw PdfError("bad hex string");
      if (hi < 0) {
        hi = v;
      } else {
        out.push_back(static_cast<char>(hi * 16 + v));
        hi = -1;
      }
    }
    throw PdfError("unterminated hex string");
  }

  Object parse_dict_or_stream(int depth) {
    pos_ += 2;  // "<<"
    Dict dict;
    while (true) {
      skip_ws();
      if (pos_ + 1 >= src_.size()) throw PdfError("unterminated dictionary");
      if (src_[pos_] == '>' && src_[pos_ + 1] == '>') {
        pos_ += 2;
        break;
      }
      if (src_[pos_] != '/') throw PdfError("dictionary key is not a name");
      Name key = parse_name();
      Object value = parse_object(nullptr, depth + 1);
      dict.entries.emplace_back(std::move(key.value), std::move(value));
    }
    const std::size_t after = pos_;
    if (!match_keyword("stream")) {
      pos_ = after;
      return Object{std::move(dict)};
    }
    // Stream data starts after the EOL that follows the keyword.
    if (pos_ < src_.size() && src_[pos_] == '\r') ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
    const std::size_t data_start = pos_;
    std::size_t data_end = std::string_view::npos;
    if (const Object* len = dict.find("Length")) {
      if (auto n = std::get_if<std::int64_t>(&len->value); n && *n >= 0) {
        const std::size_t candidate = data_start + static_cast<std::size_t>(*n);
        if (candidate <= src_.size()) {
          Lexer probe(src_, candidate);
          if (probe.match_keyword("endstream")) {
            data_end = candidate;
            pos_ = probe.pos();
          }
        }
      }
    }
    if (data_end == std::string_view::npos) {
      const std::size_t hit = src_.find("endstream", data_start);
      if (hit == std::string_view::npos) throw PdfError("stream without endstream");
      data_end = hit;
      // Trailing EOL belongs to the keyword, not the data.
      if (data_end > data_start && src_[data_end - 1] == '\n') --data_end;
      if (data_end > data_start && src_[data_end - 1] == '\r') --data_end;
      pos_ = hit + std::strlen("endstream");
    }
    auto stream = std::make_shared<Stream>();
    stream->dict = std::move(dict);
    stream->raw = std::string(src_.substr(data_start, data_end - data_start));
    return Object{std::shared_ptr<const Stream>(std::move(stream))};
  }

  Object parse_number_or_ref() {
    const std::size_t start = pos_;
    if (src_[pos_] == '+' || src_[pos_] == '-') ++pos_;
    bool real = false;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      if (src_[pos_] == '.') real = true;
      ++pos_;
    }
    std::string_view tok = src_.substr(start, pos_ - start);
    if (tok == "+" || tok == "-" || tok == ".") throw PdfError("malformed number");
    if (real) {
      std::string t(tok);
      if (t.front() == '+') t.erase(0, 1);
      return Object{std::strtod(t.c_str(), nullptr)};
    }
    std::int64_t v = 0;
    const char* b = tok.data() + (tok.front() == '+' ? 1 : 0);
    std::from_chars(b, tok.data() + tok.size(), v);
    // "N G R" lookahead.
    if (v >= 0 && tok.front() != '+' && tok.front() != '-') {
      const std::size_t save = pos_;
      skip_ws();
      const std::size_t gstart = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ > gstart) {
        int gen = 0;
        std::from_chars(src_.data() + gstart, src_.data() + pos_, gen);
        if (match_keyword("R")) return Object{Ref{static_cast<int>(v), gen}};
      }
      pos_ = save;
    }
    return Object{v};
  }

  std::string_view src_;
  std::size_t pos_;
};

// ---------------------------------------------------------------------------
// Filters

std::string ascii_hex_decode(std::string_view in) {
  std::string out;
  int hi = -1;
  for (char c : in) {
    if (c == '>') break;
    if (is_ws(c)) continue;
    const int v = hex_val(c);
    if (v < 0) throw PdfError("ASCIIHexDecode: bad digit");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>(hi * 16 + v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
  return out;
}

std::string ascii85_decode(std::string_view in) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char c = in[i];
    if (c == '~') break;
    if (is_ws(c)) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') throw PdfError("ASCII85Decode: bad character");
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) out.push_back(static_cast<char>((tuple >> (8 * k)) & 0xff));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out.push_back(static_cast<char>((tuple >> (24 - 8 * k)) & 0xff));
  }
  return out;
}

std::string png_unpredict(const std::string& data, int colors, int bpc, int columns) {
  const std::size_t bpp = std::max<std::size_t>(1, static_cast<std::size_t>(colors * bpc) / 8);
  const std::size_t row_len = (static_cast<std::size_t>(colors * bpc * columns) + 7) / 8;
  std::string out;
  std::string prev(row_len, '\0');
  std::size_t pos = 0;
  while (pos + 1 + row_len <= data.size()) {
    const auto type = static_cast<unsigned char>(data[pos]);
    std::string row = data.substr(pos + 1, row_len);
    for (std::size_t i = 0; i < row_len; ++i) {
      const auto left = i >= bpp ? static_cast<unsigned char>(row[i - bpp]) : 0;
      const auto up = static_cast<unsigned char>(prev[i]);
      const auto up_left = i >= bpp ? static_cast<unsigned char>(prev[i - bpp]) : 0;
      auto cur = static_cast<unsigned char>(row[i]);
      switch (type) {
        case 0: break;
        case 1: cur = static_cast<unsigned char>(cur + left); break;
        case 2: cur = static_cast<unsigned char>(cur + up); break;
        case 3: cur = static_cast<unsigned char>(cur + (left + up) / 2); break;
        case 4: {
          const int p = left + up - up_left;
          const int pa = std::abs(p - left), pb = std::abs(p - up), pc = std::abs(p - up_left);
          const int pred = (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : up_left);
          cur = static_cast<unsigned char>(cur + pred);
          break;
        }
        default: throw PdfError("unknown PNG predictor row type");
      }
      row[i] = static_cast<char>(cur);
    }
    out += row;
    prev = std::move(row);
    pos += 1 + row_len;
  }
  return out;
}

bool is_image_filter(std::string_view f) {
  return f == "DCTDecode" || f == "JPXDecode" || f == "CCITTFaxDecode" || f == "JBIG2Decode" ||
         f == "DCT" || f == "CCF";
}

std::string win_ansi_to_utf8(std::string_view bytes) {
  std::string out;
  for (char ch : bytes) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) {
      if (c >= 0x20 || c == '\n' || c == '\t') out.push_back(static_cast<char>(c));
      continue;
    }
    switch (c) {
      case 0x91: out += "\xE2\x80\x98"; continue;
      case 0x92: out += "\xE2\x80\x99"; continue;
      case 0x93: out += "\xE2\x80\x9C"; continue;
      case 0x94: out += "\xE2\x80\x9D"; continue;
      case 0x96: out += "\xE2\x80\x93"; continue;
      case 0x97: out += "\xE2\x80\x94"; continue;
      default: break;
    }
    if (c < 0xA0) continue;
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  }
  return out;
}

}  // namespace

std::string inflate(std::string_view data) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw PdfError("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[16384];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = ::inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      // Truncated streams are common in the wild; keep what decoded.
      if (rc == Z_BUF_ERROR && !out.empty()) return out;
      throw PdfError("FlateDecode: corrupt data");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  return out;
}

// ---------------------------------------------------------------------------
// Document

const Object& Document::resolve(const Object& obj) const {
  static const Object kNull{};
  const Object* cur = &obj;
  for (int hops = 0; hops < 32; ++hops) {
    const Ref* r = cur->as_ref();
    if (!r) return *cur;
    auto it = objects_.find(r->num);
    if (it == objects_.end()) return kNull;
    cur = &it->second;
  }
  throw PdfError("reference chain too long");
}

const Object* Document::lookup(const Dict& dict, std::string_view key) const {
  const Object* o = dict.find(key);
  if (!o) return nullptr;
  const Object& r = resolve(*o);
  return r.is_null() ? nullptr : &r;
}

std::string Document::decode_stream(const Stream& stream) const {
  std::vector<std::string> filters;
  std::vector<const Dict*> params;
  if (const Object* f = lookup(stream.dict, "Filter")) {
    if (const Name* n = f->as_name()) {
      filters.push_back(n->value);
    } else if (const Array* arr = f->as_array()) {
      for (const auto& e : *arr) {
        if (const Name* n = resolve(e).as_name()) filters.push_back(n->value);
      }
    }
  }
  if (const Object* p = lookup(stream.dict, "DecodeParms")) {
    if (const Dict* d = p->as_dict()) {
      params.push_back(d);
    } else if (const Array* arr = p->as_array()) {
      for (const auto& e : *arr) params.push_back(resolve(e).as_dict());
    }
  }
  std::string data = stream.raw;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const std::string& f = filters[i];
    const Dict* parms = i < params.size() ? params[i] : nullptr;
    if (f == "FlateDecode" || f == "Fl") {
      data = inflate(data);
      if (parms) {
        auto get = [&](std::string_view k, std::int64_t def) {
          const Object* o = lookup(*parms, k);
          auto v = o ? o->as_int() : std::nullopt;
          return v ? *v : def;
        };
        const auto predictor = get("Predictor", 1);
        if (predictor >= 10) {
          data = png_unpredict(data, static_cast<int>(get("Colors", 1)),
                               static_cast<int>(get("BitsPerComponent", 8)),
                               static_cast<int>(get("Columns", 1)));
        } else if (predictor != 1) {
          throw PdfError("unsupported predictor " + std::to_string(predictor));
        }
      }
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      data = ascii_hex_decode(data);
    } else if (f == "ASCII85Decode" || f == "A85") {
      data = ascii85_decode(data);
    } else if (is_image_filter(f)) {
      if (i + 1 != filters.size()) throw PdfError("image filter must be last");
      break;  // left for the image decoder
    } else {
      throw PdfError("unsupported filter " + f);
    }
  }
  return data;
}

std::string Document::page_content(const Page& page) const {
  const Object* contents = lookup(page.dict, "Contents");
  if (!contents) return {};
  std::string out;
  auto append = [&](const Object& o) {
    if (const Stream* s = resolve(o).as_stream()) {
      out += decode_stream(*s);
      out.push_back('\n');
    }
  };
  if (const Array* arr = contents->as_array()) {
    for (const auto& e : *arr) append(e);
  } else {
    append(*contents);
  }
  return out;
}

namespace {

std::optional<Rect> to_rect(const Document& doc, const Object* o) {
  if (!o) return std::nullopt;
  const Array* arr = o->as_array();
  if (!arr || arr->size() != 4) return std::nullopt;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    auto n = doc.resolve((*arr)[static_cast<std::size_t>(i)]).as_number();
    if (!n) return std::nullopt;
    v[i] = *n;
  }
  return Rect{std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]),
              std::max(v[1], v[3])};
}

}  // namespace

Document Document::parse(std::span<const std::uint8_t> bytes) {
  std::string_view src(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto header = src.substr(0, 1024).find("%PDF-");
  if (header == std::string_view::npos) throw PdfError("missing %PDF header");

  Document doc;

  // Objects are located by scanning for "N G obj" rather than trusting the
  // xref table, which is frequently wrong in scanned-document producers.
  std::size_t search = header;
  while (true) {
    const std::size_t hit = src.find("obj", search);
    if (hit == std::string_view::npos) break;
    search = hit + 3;
    if (hit + 3 < src.size() && is_regular(src[hit + 3])) continue;
    // Walk back over "<num> <gen> ".
    std::size_t p = hit;
    auto back_ws = [&] {
      std::size_t n = 0;
      while (p > 0 && is_ws(src[p - 1])) --p, ++n;
      return n;
    };
    auto back_digits = [&] {
      const std::size_t end = p;
      while (p > 0 && std::isdigit(static_cast<unsigned char>(src[p - 1]))) --p;
      return end - p;
    };
    if (back_ws() == 0 || back_digits() == 0) continue;
    const std::size_t gen_start = p;
    if (back_ws() == 0 || back_digits() == 0) continue;
    if (p > 0 && is_regular(src[p - 1])) continue;
    int num = 0;
    std::from_chars(src.data() + p, src.data() + gen_start, num);
    try {
      Lexer lx(src, hit + 3);
      Object obj = lx.parse_object();
      lx.match_keyword("endobj");
      search = lx.pos();
      doc.objects_[num] = std::move(obj);
    } catch (const PdfError&) {
      // Damaged object; keep scanning.
    }
  }

  // Expand object streams for objects not defined at top level.
  std::vector<std::pair<int, Object>> from_streams;
  for (const auto& [num, obj] : doc.objects_) {
    const Stream* s = obj.as_stream();
    if (!s) continue;
    const Name* type = s->dict.find("Type") ? s->dict.find("Type")->as_name() : nullptr;
    if (!type || type->value != "ObjStm") continue;
    try {
      const std::string data = doc.decode_stream(*s);
      const auto n = doc.lookup(s->dict, "N") ? doc.lookup(s->dict, "N")->as_int() : std::nullopt;
      const auto first =
          doc.lookup(s->dict, "First") ? doc.lookup(s->dict, "First")->as_int() : std::nullopt;
      if (!n || !first) continue;
      Lexer idx(data);
      std::vector<std::pair<int, std::int64_t>> offsets;
      for (std::int64_t i = 0; i < *n; ++i) {
        auto on = idx.parse_object().as_int();
        auto off = idx.parse_object().as_int();
        if (!on || !off) break;
        offsets.emplace_back(static_cast<int>(*on), *off);
      }
      for (const auto& [on, off] : offsets) {
        Lexer body(data, static_cast<std::size_t>(*first + off));
        from_streams.emplace_back(on, body.parse_object());
      }
    } catch (const PdfError&) {
    }
  }
  for (auto& [num, obj] : from_streams) doc.objects_.try_emplace(num, std::move(obj));

  // Trailer: classic "trailer" dictionaries and cross-reference streams.
  auto merge_trailer = [&](const Dict& d) {
    for (const auto& [k, v] : d.entries) {
      auto it = std::find_if(doc.trailer_.entries.begin(), doc.trailer_.entries.end(),
                             [&](const auto& e) { return e.first == k; });
      if (it == doc.trailer_.entries.end()) {
        doc.trailer_.entries.emplace_back(k, v);
      } else {
        it->second = v;
      }
    }
  };
  for (const auto& [num, obj] : doc.objects_) {
    const Stream* s = obj.as_stream();
    if (!s) continue;
    const Object* t = s->dict.find("Type");
    if (t && t->as_name() && t->as_name()->value == "XRef") merge_trailer(s->dict);
  }
  for (std::size_t at = src.find("trailer"); at != std::string_view::npos;
       at = src.find("trailer", at + 7)) {
    try {
      Lexer lx(src, at + 7);
      Object t = lx.parse_object();
      if (const Dict* d = t.as_dict()) merge_trailer(*d);
    } catch (const PdfError&) {
    }
  }

  if (doc.trailer_.has("Encrypt")) throw UnsupportedPdfError("encrypted PDF is not supported");

  const Dict* catalog = nullptr;
  if (const Object* root = doc.lookup(doc.trailer_, "Root")) catalog = root->as_dict();
  if (!catalog) {
    for (const auto& [num, obj] : doc.objects_) {
      const Dict* d = obj.as_dict();
      if (!d) continue;
      const Object* t = d->find("Type");
      if (t && t->as_name() && t->as_name()->value == "Catalog") {
        catalog = d;
        break;
      }
    }
  }
  if (!catalog) throw PdfError("no document catalog");
  const Object* pages_root = doc.lookup(*catalog, "Pages");
  if (!pages_root || !pages_root->as_dict()) throw PdfError("no page tree");

  struct Inherited {
    std::optional<Rect> media_box;
    int rotate = 0;
    Dict resources;
  };
  std::set<const Dict*> visiting;
  auto walk = [&](auto&& self, const Dict& node, Inherited inh, int depth) -> void {
    if (depth > 64 || !visiting.insert(&node).second) throw PdfError("cyclic page tree");
    if (auto mb = to_rect(doc, doc.lookup(node, "MediaBox"))) inh.media_box = mb;
    if (const Object* r = doc.lookup(node, "Rotate")) {
      if (auto v = r->as_int()) inh.rotate = static_cast<int>(((*v % 360) + 360) % 360);
    }
    if (const Object* res = doc.lookup(node, "Resources")) {
      if (const Dict* d = res->as_dict()) inh.resources = *d;
    }
    const Object* type = doc.lookup(node, "Type");
    const bool is_pages = (type && type->as_name() && type->as_name()->value == "Pages") ||
                          (!type && node.has("Kids"));
    if (is_pages) {
      if (const Object* kids = doc.lookup(node, "Kids")) {
        if (const Array* arr = kids->as_array()) {
          for (const auto& kid : *arr) {
            const Dict* kd = doc.resolve(kid).as_dict();
            if (kd) self(self, *kd, inh, depth + 1);
          }
        }
      }
    } else {
      Page page;
      page.dict = node;
      page.media_box = inh.media_box.value_or(Rect{0, 0, 612, 792});
      page.rotate = inh.rotate - inh.rotate % 90;
      page.resources = inh.resources;
      doc.pages_.push_back(std::move(page));
    }
    visiting.erase(&node);
  };
  walk(walk, *pages_root->as_dict(), Inherited{}, 0);
  return doc;
}

// ---------------------------------------------------------------------------
// Content streams

std::vector<Operation> parse_content(std::string_view content) {
  std::vector<Operation> ops;
  Lexer lx(content);
  std::vector<Object> operands;
  while (!lx.eof()) {
    Keyword kw;
    Object obj;
    try {
      obj = lx.parse_object(&kw);
    } catch (const PdfError&) {
      // Skip one byte of garbage and resynchronize.
      lx.seek(lx.pos() + 1);
      operands.clear();
      continue;
    }
    if (kw.word.empty()) {
      operands.push_back(std::move(obj));
      continue;
    }
    if (kw.word == "BI") {
      // Inline image: skip to the "EI" that ends it.
      const std::size_t id = content.find("ID", lx.pos());
      std::size_t ei = id == std::string_view::npos ? id : content.find("EI", id + 2);
      while (ei != std::string_view::npos &&
             !(is_ws(content[ei - 1]) && (ei + 2 >= content.size() || !is_regular(content[ei + 2])))) {
        ei = content.find("EI", ei + 2);
      }
      lx.seek(ei == std::string_view::npos ? content.size() : ei + 2);
      operands.clear();
      continue;
    }
    ops.push_back(Operation{std::move(kw.word), std::move(operands)});
    operands.clear();
  }
  return ops;
}

namespace {

void collect_text(const Document& doc, std::string_view content, const Dict& resources,
                  std::string& out, int depth) {
  if (depth > 8) return;
  auto newline = [&] {
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  };
  auto space = [&] {
    if (!out.empty() && out.back() != ' ' && out.back() != '\n') out.push_back(' ');
  };
  for (const auto& op : parse_content(content)) {
    const std::string& o = op.op;
    if (o == "Tj" || o == "'" || o == "\"") {
      if (o != "Tj") newline();
      if (!op.operands.empty()) {
        if (const String* s = op.operands.back().as_string()) out += win_ansi_to_utf8(s->bytes);
      }
    } else if (o == "TJ") {
      if (op.operands.empty()) continue;
      const Array* arr = op.operands.back().as_array();
      if (!arr) continue;
      for (const auto& e : *arr) {
        if (const String* s = e.as_string()) {
          out += win_ansi_to_utf8(s->bytes);
        } else if (auto n = e.as_number(); n && *n < -200) {
          space();
        }
      }
    } else if (o == "Td" || o == "TD") {
      if (op.operands.size() == 2) {
        const auto ty = op.operands[1].as_number().value_or(0);
        const auto tx = op.operands[0].as_number().value_or(0);
        if (ty != 0) {
          newline();
        } else if (tx != 0) {
          space();
        }
      }
    } else if (o == "T*" || o == "Tm" || o == "ET") {
      newline();
    } else if (o == "Do" && !op.operands.empty()) {
      const Name* name = op.operands.back().as_name();
      const Object* xobjs = doc.lookup(resources, "XObject");
      if (!name || !xobjs || !xobjs->as_dict()) continue;
      const Object* xo = doc.lookup(*xobjs->as_dict(), name->value);
      const Stream* s = xo ? xo->as_stream() : nullptr;
      if (!s) continue;
      const Object* sub = doc.lookup(s->dict, "Subtype");
      if (!sub || !sub->as_name() || sub->as_name()->value != "Form") continue;
      const Object* res = doc.lookup(s->dict, "Resources");
      const Dict& form_res = res && res->as_dict() ? *res->as_dict() : resources;
      collect_text(doc, doc.decode_stream(*s), form_res, out, depth + 1);
    }
  }
}

}  // namespace

std::string Document::extract_text(const Page& page) const {
  std::string out;
  collect_text(*this, page_content(page), page.resources, out, 0);
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
  return out;
}

}  // namespace pfd::pdf
