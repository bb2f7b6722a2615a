#include "dsbrdf/core.hpp"

#include <algorithm>
#include <string>

namespace dsbrdf {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateVector: return "degenerate-vector";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kRegionCountMismatch: return "region-count-mismatch";
    case ErrorCode::kTooSmall: return "too-small";
    case ErrorCode::kRankDeficient: return "rank-deficient";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kNonfiniteGradient: return "nonfinite-gradient";
    case ErrorCode::kLineSearchFailure: return "line-search-failure";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kTruncatedPayload: return "truncated-payload";
    case ErrorCode::kNanInFile: return "nan-in-file";
    case ErrorCode::kBitDepthMismatch: return "bit-depth-mismatch";
    case ErrorCode::kNonRgba: return "non-rgba";
    case ErrorCode::kColorTypeMismatch: return "color-type-mismatch";
    case ErrorCode::kWrongCount: return "wrong-count";
    case ErrorCode::kMissingVersion: return "missing-version";
    case ErrorCode::kParseError: return "parse-error";
  }
  return "unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateVector:
    case ErrorCode::kRankDeficient:
    case ErrorCode::kOverflow:
    case ErrorCode::kNonfiniteGradient:
    case ErrorCode::kLineSearchFailure:
      return true;
    default:
      return false;
  }
}

Vec3 normalize(const Vec3& v) {
  const double len = length(v);
  if (!(len > 1e-12)) {
    throw Error(ErrorCode::kDegenerateVector, "cannot normalize a vector of length " + std::to_string(len));
  }
  return v * (1.0 / len);
}

namespace {

void require_dims(int w, int h, const char* what) {
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " dimensions must be positive");
  }
}

}  // namespace

NormalMap::NormalMap(int width, int height, std::vector<Vec3> normals, std::vector<std::uint8_t> mask)
    : width_(width), height_(height), normals_(std::move(normals)), mask_(std::move(mask)) {
  require_dims(width, height, "normal map");
  const auto n = static_cast<std::size_t>(width) * height;
  if (normals_.size() != n || mask_.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "normal map grid does not match width*height");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mask_[i] == 0) {
      normals_[i] = Vec3{};
      continue;
    }
    mask_[i] = 1;
    const double len = length(normals_[i]);
    if (!std::isfinite(len) || std::abs(len - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument,
                  "foreground normal at index " + std::to_string(i) + " has length " + std::to_string(len));
    }
  }
}

std::size_t NormalMap::foreground_count() const {
  return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; }));
}

EnvironmentMap::EnvironmentMap(int heightL, int widthL, std::vector<Rgb> radiance)
    : height_(heightL), width_(widthL), radiance_(std::move(radiance)) {
  require_dims(widthL, heightL, "environment map");
  if (radiance_.size() != static_cast<std::size_t>(heightL) * widthL) {
    throw Error(ErrorCode::kShapeMismatch, "environment map grid does not match heightL*widthL");
  }
  for (std::size_t i = 0; i < radiance_.size(); ++i) {
    for (double c : radiance_[i]) {
      if (!std::isfinite(c) || c < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "environment texel " + std::to_string(i) + " is negative or non-finite");
      }
    }
  }
}

EnvironmentMap EnvironmentMap::zeros(int heightL, int widthL) {
  return EnvironmentMap(heightL, widthL, std::vector<Rgb>(static_cast<std::size_t>(heightL) * widthL, Rgb{}));
}

EnvironmentMap EnvironmentMap::scaled(double factor) const {
  std::vector<Rgb> out = radiance_;
  for (auto& texel : out) {
    for (double& c : texel) c *= factor;
  }
  return EnvironmentMap(height_, width_, std::move(out));
}

Camera Camera::pinhole(double fovYDegrees, int imageWidth, int imageHeight) {
  require_dims(imageWidth, imageHeight, "camera image");
  if (!(fovYDegrees > 0.0 && fovYDegrees < 180.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pinhole field of view must lie strictly inside (0, 180) degrees");
  }
  return Camera(CameraMode::kPinhole, fovYDegrees, imageWidth, imageHeight);
}

Camera Camera::orthographic(int imageWidth, int imageHeight) {
  require_dims(imageWidth, imageHeight, "camera image");
  return Camera(CameraMode::kOrthographic, 0.0, imageWidth, imageHeight);
}

Vec3 Camera::view_direction(int px, int py) const {
  if (mode_ == CameraMode::kOrthographic) return {0.0, 0.0, 1.0};
  const double w = width_;
  const double h = height_;
  const double t = std::tan(fovYDegrees_ * kPi / 360.0);
  const Vec3 dir{(2.0 * (px + 0.5) / w - 1.0) * t * w / h, (1.0 - 2.0 * (py + 0.5) / h) * t, -1.0};
  return -normalize(dir);
}

SegmentationMask::SegmentationMask(int width, int height, std::vector<std::uint16_t> regionIds, int regionCount)
    : width_(width), height_(height), ids_(std::move(regionIds)), regionCount_(regionCount) {
  require_dims(width, height, "segmentation");
  if (ids_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kShapeMismatch, "segmentation grid does not match width*height");
  }
  if (regionCount <= 0 || regionCount >= kBackground) {
    throw Error(ErrorCode::kInvalidArgument, "segmentation region count must be positive");
  }
  for (std::uint16_t id : ids_) {
    if (id != kBackground && id >= regionCount) {
      throw Error(ErrorCode::kInvalidArgument,
                  "region id " + std::to_string(id) + " out of range for " + std::to_string(regionCount) + " regions");
    }
  }
}

SegmentationMask SegmentationMask::from_ids(int width, int height, std::vector<std::uint16_t> regionIds) {
  int maxId = -1;
  for (std::uint16_t id : regionIds) {
    if (id != kBackground) maxId = std::max(maxId, static_cast<int>(id));
  }
  return SegmentationMask(width, height, std::move(regionIds), std::max(maxId + 1, 1));
}

}  // namespace dsbrdf
