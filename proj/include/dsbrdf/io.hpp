#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsbrdf/brdf.hpp"
#include "dsbrdf/core.hpp"
#include "dsbrdf/metrics.hpp"

// File codecs. Every reader has an in-memory variant (parse_* / decode_*) that
// never crashes on malformed input: it returns data or throws dsbrdf::Error.
namespace dsbrdf::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// ---- PFM (color "PF" only; written little-endian, bottom row first) ----

struct PfmImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major, top row first
};

/// Errors: kMalformedHeader (bad magic, "Pf" grayscale, bad sizes or scale),
/// kTruncatedPayload, kNanInFile (NaN or infinity in the payload).
PfmImage parse_pfm(std::span<const std::uint8_t> bytes);
Bytes encode_pfm(int width, int height, std::span<const Rgb> pixels);

RadianceImage read_radiance_pfm(const std::filesystem::path& path);
EnvironmentMap read_env_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const RadianceImage& image);
void write_pfm(const std::filesystem::path& path, const EnvironmentMap& env);

// ---- Normal maps as 16-bit RGBA PNG ----
// channel = round((n_c + 1) / 2 * 65535); alpha 65535 foreground, 0 background.

NormalMap decode_normal_png16(std::span<const std::uint8_t> bytes);
Bytes encode_normal_png16(const NormalMap& normals);
NormalMap read_normal_png16(const std::filesystem::path& path);
void write_normal_png16(const std::filesystem::path& path, const NormalMap& normals);

std::uint16_t quantize_normal_component(double c);
double dequantize_normal_component(std::uint16_t v);

// ---- Segmentation as 8-bit grayscale PNG; 255 marks background ----

SegmentationMask decode_segmentation_png(std::span<const std::uint8_t> bytes);
Bytes encode_segmentation_png(const SegmentationMask& mask);
SegmentationMask read_segmentation_png(const std::filesystem::path& path);
void write_segmentation_png(const std::filesystem::path& path, const SegmentationMask& mask);

/// 8-bit RGB preview of a tone-mapped image.
void write_ldr_png(const std::filesystem::path& path, const LdrImage& image);

// ---- Material files: JSON with a version tag and ordered parameter arrays ----

inline constexpr int kMaterialFormatVersion = 1;

struct MaterialFile {
  DsbrdfMaterial material;
  std::optional<std::string> name;
};

/// Errors: kParseError (not JSON / non-numeric entries), kMissingVersion,
/// kWrongCount (an array without exactly 108 numbers), kInvalidArgument
/// (only one of lo/hi present, lo >= hi, unsupported version).
/// Missing lo/hi fall back to the default normalization ranges.
MaterialFile parse_material(std::string_view text);
std::string format_material(const MaterialFile& file);
MaterialFile read_material(const std::filesystem::path& path);
void write_material(const std::filesystem::path& path, const MaterialFile& file);

}  // namespace dsbrdf::io
