#include "dsbrdf/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>

#include <json.hpp>

namespace dsbrdf::io {

namespace {

// Refuse images beyond this many pixels or this many pixels per side.
constexpr std::uint32_t kMaxSide = 1u << 15;
constexpr std::uint64_t kMaxPixels = 1ull << 26;

bool sane_size(std::uint64_t w, std::uint64_t h) {
  return w >= 1 && h >= 1 && w <= kMaxSide && h <= kMaxSide && w * h <= kMaxPixels;
}

std::string path_str(const std::filesystem::path& p) { return p.string(); }

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path_str(path) + "' for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "failed reading '" + path_str(path) + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path_str(path) + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path_str(path) + "'");
}

// ---------------------------------------------------------------- PFM

namespace {

struct HeaderCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  static bool space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  std::string token() {
    while (pos < bytes.size() && space(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !space(bytes[pos]) && t.size() < 64) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  }
};

[[noreturn]] void bad_header(const std::string& why) { throw Error(ErrorCode::kMalformedHeader, "pfm: " + why); }

long parse_dim(const std::string& t) {
  if (t.empty() || t.size() > 9 || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    bad_header("invalid dimension '" + t + "'");
  }
  return std::stol(t);
}

}  // namespace

PfmImage parse_pfm(std::span<const std::uint8_t> bytes) {
  HeaderCursor cur{bytes};
  const std::string magic = cur.token();
  if (magic == "Pf") bad_header("grayscale 'Pf' files are not supported");
  if (magic != "PF") bad_header("missing 'PF' magic");
  const long w = parse_dim(cur.token());
  const long h = parse_dim(cur.token());
  if (!sane_size(static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(h))) bad_header("unsupported image size");
  const std::string scaleTok = cur.token();
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(scaleTok, &used);
    if (used != scaleTok.size()) bad_header("invalid scale '" + scaleTok + "'");
  } catch (const std::logic_error&) {
    bad_header("invalid scale '" + scaleTok + "'");
  }
  if (!std::isfinite(scale) || scale == 0.0) bad_header("scale must be finite and nonzero");
  if (cur.pos >= bytes.size() || !HeaderCursor::space(bytes[cur.pos])) {
    throw Error(ErrorCode::kTruncatedPayload, "pfm: no payload after header");
  }
  ++cur.pos;  // exactly one whitespace byte separates header and data

  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - cur.pos < count * 4) {
    throw Error(ErrorCode::kTruncatedPayload, "pfm: expected " + std::to_string(count * 4) + " payload bytes, got " +
                                                  std::to_string(bytes.size() - cur.pos));
  }
  PfmImage img{static_cast<int>(w), static_cast<int>(h),
               std::vector<Rgb>(static_cast<std::size_t>(w) * static_cast<std::size_t>(h))};
  const std::uint8_t* data = bytes.data() + cur.pos;
  for (long row = 0; row < h; ++row) {
    const long y = h - 1 - row;  // file rows run bottom to top
    for (long x = 0; x < w; ++x) {
      for (int k = 0; k < 3; ++k) {
        const std::uint8_t* b = data + ((static_cast<std::size_t>(row) * w + x) * 3 + k) * 4;
        const std::uint32_t u = little ? (std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
                                          std::uint32_t{b[3]} << 24)
                                       : (std::uint32_t{b[3]} | std::uint32_t{b[2]} << 8 | std::uint32_t{b[1]} << 16 |
                                          std::uint32_t{b[0]} << 24);
        const float f = std::bit_cast<float>(u);
        if (!std::isfinite(f)) {
          throw Error(ErrorCode::kNanInFile, "pfm: non-finite value at pixel (" + std::to_string(x) + ", " +
                                                 std::to_string(y) + ")");
        }
        img.pixels[static_cast<std::size_t>(y) * w + x][k] = f;
      }
    }
  }
  return img;
}

Bytes encode_pfm(int width, int height, std::span<const Rgb> pixels) {
  if (!sane_size(static_cast<std::uint64_t>(std::max(width, 0)), static_cast<std::uint64_t>(std::max(height, 0))) ||
      pixels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kShapeMismatch, "pfm: pixel count does not match dimensions");
  }
  const std::string header = "PF\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + pixels.size() * 12);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      for (int k = 0; k < 3; ++k) {
        const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(pixels[static_cast<std::size_t>(y) * width + x][k]));
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
      }
    }
  }
  return out;
}

RadianceImage read_radiance_pfm(const std::filesystem::path& path) {
  PfmImage p = parse_pfm(read_file(path));
  RadianceImage img;
  img.width = p.width;
  img.height = p.height;
  img.pixels = std::move(p.pixels);
  return img;
}

EnvironmentMap read_env_pfm(const std::filesystem::path& path) {
  PfmImage p = parse_pfm(read_file(path));
  return EnvironmentMap(p.height, p.width, std::move(p.pixels));
}

void write_pfm(const std::filesystem::path& path, const RadianceImage& image) {
  write_file(path, encode_pfm(image.width, image.height, image.pixels));
}

void write_pfm(const std::filesystem::path& path, const EnvironmentMap& env) {
  write_file(path, encode_pfm(env.width(), env.height(), env.radiance()));
}

// ---------------------------------------------------------------- PNG

namespace {

// libpng reports errors by longjmp. The functions that call setjmp keep only
// trivially destructible locals so the jump never skips a destructor.

struct PngIo {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
  Bytes* sink = nullptr;
  char message[256] = {};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* io = static_cast<PngIo*>(png_get_error_ptr(png));
  std::snprintf(io->message, sizeof io->message, "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  if (io->size - io->pos < n) png_error(png, "unexpected end of data");
  std::memcpy(out, io->data + io->pos, n);
  io->pos += n;
}

void write_to_memory(png_structp png, png_bytep in, png_size_t n) {
  auto* io = static_cast<PngIo*>(png_get_io_ptr(png));
  io->sink->insert(io->sink->end(), in, in + n);
}

void flush_noop(png_structp) {}

struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bitDepth = 0;
  int colorType = 0;
  int passes = 1;
};

class PngReadHandle {
 public:
  explicit PngReadHandle(std::span<const std::uint8_t> bytes) {
    io_.data = bytes.data();
    io_.size = bytes.size();
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &io_, on_error, on_warning);
    if (png_ != nullptr) info_ = png_create_info_struct(png_);
    if (png_ == nullptr || info_ == nullptr) throw Error(ErrorCode::kIo, "png: cannot allocate decoder");
    png_set_read_fn(png_, &io_, read_from_memory);
    png_set_user_limits(png_, kMaxSide, kMaxSide);
  }
  ~PngReadHandle() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReadHandle(const PngReadHandle&) = delete;
  PngReadHandle& operator=(const PngReadHandle&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }
  PngIo& io() { return io_; }

 private:
  PngIo io_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

bool read_header_phase(png_structp png, png_infop info, PngHeader* h) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  int interlace = 0;
  png_get_IHDR(png, info, &h->width, &h->height, &h->bitDepth, &h->colorType, &interlace, nullptr, nullptr);
  h->passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  return true;
}

bool read_rows_phase(png_structp png, png_infop info, std::uint8_t* buffer, std::size_t rowBytes, png_uint_32 height,
                     int passes) {
  if (setjmp(png_jmpbuf(png))) return false;
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 y = 0; y < height; ++y) png_read_row(png, buffer + rowBytes * y, nullptr);
  }
  png_read_end(png, info);
  return true;
}

struct DecodedPng {
  PngHeader header;
  std::size_t rowBytes = 0;
  Bytes pixels;
};

const char* color_type_name(int t) {
  switch (t) {
    case PNG_COLOR_TYPE_GRAY: return "grayscale";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    default: return "unknown";
  }
}

// Decodes after checking the declared format, so wrong inputs fail before
// any pixel data is touched.
DecodedPng decode_png(std::span<const std::uint8_t> bytes, int wantDepth, int wantColor, ErrorCode colorError) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kMalformedHeader, "png: missing PNG signature");
  }
  PngReadHandle handle(bytes);
  DecodedPng out;
  if (!read_header_phase(handle.png(), handle.info(), &out.header)) {
    throw Error(ErrorCode::kMalformedHeader, std::string("png: ") + handle.io().message);
  }
  const PngHeader& h = out.header;
  if (h.colorType != wantColor) {
    throw Error(colorError, std::string("png: expected ") + color_type_name(wantColor) + " image, got " +
                                color_type_name(h.colorType));
  }
  if (h.bitDepth != wantDepth) {
    throw Error(ErrorCode::kBitDepthMismatch,
                "png: expected " + std::to_string(wantDepth) + "-bit samples, got " + std::to_string(h.bitDepth));
  }
  if (!sane_size(h.width, h.height)) throw Error(ErrorCode::kMalformedHeader, "png: unsupported image size");
  out.rowBytes = png_get_rowbytes(handle.png(), handle.info());
  out.pixels.assign(out.rowBytes * h.height, 0);
  if (!read_rows_phase(handle.png(), handle.info(), out.pixels.data(), out.rowBytes, h.height, h.passes)) {
    throw Error(ErrorCode::kTruncatedPayload, std::string("png: ") + handle.io().message);
  }
  return out;
}

bool write_phase(PngIo* io, const std::uint8_t* pixels, png_uint_32 w, png_uint_32 h, int depth, int color,
                 std::size_t rowBytes) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, io, on_error, on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, io, write_to_memory, flush_noop);
  png_set_IHDR(png, info, w, h, depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < h; ++y) png_write_row(png, pixels + rowBytes * y);
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return true;
}

Bytes encode_png(const Bytes& pixels, int w, int h, int depth, int color, std::size_t rowBytes) {
  Bytes out;
  PngIo io;
  io.sink = &out;
  if (!write_phase(&io, pixels.data(), static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth, color,
                   rowBytes)) {
    throw Error(ErrorCode::kIo, std::string("png: encoding failed: ") + io.message);
  }
  return out;
}

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }

void put_be16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v & 0xFF);
}

}  // namespace

std::uint16_t quantize_normal_component(double c) {
  const double v = std::clamp((c + 1.0) / 2.0, 0.0, 1.0) * 65535.0;
  return static_cast<std::uint16_t>(std::lround(v));
}

double dequantize_normal_component(std::uint16_t v) { return v / 65535.0 * 2.0 - 1.0; }

NormalMap decode_normal_png16(std::span<const std::uint8_t> bytes) {
  const DecodedPng png = decode_png(bytes, 16, PNG_COLOR_TYPE_RGB_ALPHA, ErrorCode::kNonRgba);
  const int w = static_cast<int>(png.header.width);
  const int h = static_cast<int>(png.header.height);
  std::vector<Vec3> normals(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> mask(normals.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = png.pixels.data() + png.rowBytes * y + static_cast<std::size_t>(x) * 8;
      if (be16(p + 6) == 0) continue;
      const Vec3 raw{dequantize_normal_component(be16(p)), dequantize_normal_component(be16(p + 2)),
                     dequantize_normal_component(be16(p + 4))};
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (length(raw) <= 1e-12) {
        throw Error(ErrorCode::kInvalidArgument,
                    "normal png: zero normal at pixel (" + std::to_string(x) + ", " + std::to_string(y) + ")");
      }
      normals[i] = normalize(raw);
      mask[i] = 1;
    }
  }
  return NormalMap(w, h, std::move(normals), std::move(mask));
}

Bytes encode_normal_png16(const NormalMap& normals) {
  const int w = normals.width();
  const int h = normals.height();
  const std::size_t rowBytes = static_cast<std::size_t>(w) * 8;
  Bytes pixels(rowBytes * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t* p = pixels.data() + rowBytes * y + static_cast<std::size_t>(x) * 8;
      if (!normals.foreground(x, y)) {
        put_be16(p, 32768);
        put_be16(p + 2, 32768);
        put_be16(p + 4, 32768);
        continue;  // alpha stays 0
      }
      const Vec3& n = normals.at(x, y);
      put_be16(p, quantize_normal_component(n.x));
      put_be16(p + 2, quantize_normal_component(n.y));
      put_be16(p + 4, quantize_normal_component(n.z));
      put_be16(p + 6, 65535);
    }
  }
  return encode_png(pixels, w, h, 16, PNG_COLOR_TYPE_RGB_ALPHA, rowBytes);
}

NormalMap read_normal_png16(const std::filesystem::path& path) { return decode_normal_png16(read_file(path)); }

void write_normal_png16(const std::filesystem::path& path, const NormalMap& normals) {
  write_file(path, encode_normal_png16(normals));
}

SegmentationMask decode_segmentation_png(std::span<const std::uint8_t> bytes) {
  const DecodedPng png = decode_png(bytes, 8, PNG_COLOR_TYPE_GRAY, ErrorCode::kColorTypeMismatch);
  const int w = static_cast<int>(png.header.width);
  const int h = static_cast<int>(png.header.height);
  std::vector<std::uint16_t> ids(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t v = png.pixels[png.rowBytes * y + x];
      ids[static_cast<std::size_t>(y) * w + x] = v == 255 ? SegmentationMask::kBackground : v;
    }
  }
  return SegmentationMask::from_ids(w, h, std::move(ids));
}

Bytes encode_segmentation_png(const SegmentationMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Bytes pixels(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::uint16_t id = mask.region_ids()[i];
    if (id != SegmentationMask::kBackground && id >= 255) {
      throw Error(ErrorCode::kInvalidArgument, "segmentation png holds at most 255 regions");
    }
    pixels[i] = id == SegmentationMask::kBackground ? 255 : static_cast<std::uint8_t>(id);
  }
  return encode_png(pixels, w, h, 8, PNG_COLOR_TYPE_GRAY, static_cast<std::size_t>(w));
}

SegmentationMask read_segmentation_png(const std::filesystem::path& path) {
  return decode_segmentation_png(read_file(path));
}

void write_segmentation_png(const std::filesystem::path& path, const SegmentationMask& mask) {
  write_file(path, encode_segmentation_png(mask));
}

void write_ldr_png(const std::filesystem::path& path, const LdrImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height || image.width < 1 ||
      image.height < 1) {
    throw Error(ErrorCode::kShapeMismatch, "ldr png: pixel count does not match dimensions");
  }
  Bytes pixels(image.pixels.size() * 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      pixels[i * 3 + k] = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i][k], 0.0, 255.0)));
    }
  }
  write_file(path, encode_png(pixels, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                              static_cast<std::size_t>(image.width) * 3));
}

// ---------------------------------------------------------------- materials

namespace {

using nlohmann::ordered_json;

constexpr const char* kFormatTag = "dsbrdf-material";

MaterialParams read_array(const ordered_json& doc, const char* key) {
  const auto& arr = doc.at(key);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(kMaterialParams)) {
    throw Error(ErrorCode::kWrongCount, std::string("material: '") + key + "' must hold " +
                                            std::to_string(kMaterialParams) + " numbers");
  }
  MaterialParams out{};
  for (int i = 0; i < kMaterialParams; ++i) {
    if (!arr[i].is_number()) {
      throw Error(ErrorCode::kParseError, std::string("material: '") + key + "[" + std::to_string(i) +
                                              "]' is not a number");
    }
    out[i] = arr[i].get<double>();
  }
  return out;
}

}  // namespace

MaterialFile parse_material(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("material: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "material: top level must be a JSON object");
  if (doc.contains("format") && doc["format"] != kFormatTag) {
    throw Error(ErrorCode::kInvalidArgument, "material: unknown format tag");
  }
  if (!doc.contains("version")) throw Error(ErrorCode::kMissingVersion, "material: missing 'version'");
  if (!doc["version"].is_number_integer() || doc["version"].get<long long>() != kMaterialFormatVersion) {
    throw Error(ErrorCode::kInvalidArgument, "material: unsupported version " + doc["version"].dump());
  }
  if (!doc.contains("params")) throw Error(ErrorCode::kWrongCount, "material: missing 'params'");
  MaterialFile file;
  file.material.raw = read_array(doc, "params");
  const bool hasLo = doc.contains("lo");
  const bool hasHi = doc.contains("hi");
  if (hasLo != hasHi) throw Error(ErrorCode::kInvalidArgument, "material: 'lo' and 'hi' must appear together");
  if (hasLo) {
    file.material.lo = read_array(doc, "lo");
    file.material.hi = read_array(doc, "hi");
  }
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw Error(ErrorCode::kParseError, "material: 'name' must be a string");
    file.name = doc["name"].get<std::string>();
  }
  file.material.validate();
  return file;
}

std::string format_material(const MaterialFile& file) {
  file.material.validate();
  ordered_json doc;
  doc["format"] = kFormatTag;
  doc["version"] = kMaterialFormatVersion;
  if (file.name) doc["name"] = *file.name;
  doc["params"] = file.material.raw;
  doc["lo"] = file.material.lo;
  doc["hi"] = file.material.hi;
  return doc.dump(1) + "\n";
}

MaterialFile read_material(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_material(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_material(const std::filesystem::path& path, const MaterialFile& file) {
  const std::string text = format_material(file);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dsbrdf::io
