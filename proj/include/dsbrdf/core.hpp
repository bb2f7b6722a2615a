#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dsbrdf/error.hpp"

namespace dsbrdf {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// v / |v|; throws kDegenerateVector when |v| <= 1e-12.
Vec3 normalize(const Vec3& v);

using Rgb = std::array<double, 3>;

/// Camera-space unit normals on an image grid; background pixels hold (0,0,0).
class NormalMap {
 public:
  /// Validates that every foreground normal is unit length within 1e-6 and
  /// zeroes background normals.
  NormalMap(int width, int height, std::vector<Vec3> normals, std::vector<std::uint8_t> mask);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return normals_.size(); }
  std::span<const Vec3> normals() const { return normals_; }
  std::span<const std::uint8_t> mask() const { return mask_; }
  const Vec3& at(int x, int y) const { return normals_[index(x, y)]; }
  bool foreground(int x, int y) const { return mask_[index(x, y)] != 0; }
  std::size_t foreground_count() const;
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

 private:
  int width_;
  int height_;
  std::vector<Vec3> normals_;
  std::vector<std::uint8_t> mask_;
};

/// Equirectangular HDR panorama; row h covers polar angle ~ (h + 0.5) / heightL * pi.
class EnvironmentMap {
 public:
  static constexpr int kDefaultHeight = 64;
  static constexpr int kDefaultWidth = 128;

  EnvironmentMap(int heightL, int widthL, std::vector<Rgb> radiance);
  static EnvironmentMap zeros(int heightL = kDefaultHeight, int widthL = kDefaultWidth);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return radiance_.size(); }
  std::span<const Rgb> radiance() const { return radiance_; }
  const Rgb& at(int h, int w) const { return radiance_[static_cast<std::size_t>(h) * width_ + w]; }

  EnvironmentMap scaled(double factor) const;

 private:
  int height_;
  int width_;
  std::vector<Rgb> radiance_;
};

/// Linear RGB image. Also used for image-shaped upstream gradients, which may be negative.
struct RadianceImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  RadianceImage() = default;
  RadianceImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, Rgb{}) {}

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const RadianceImage&) const = default;
};

enum class CameraMode { kPinhole, kOrthographic };

/// Camera at the origin looking down -z, +x right, +y up; pixel centers at half-integers.
class Camera {
 public:
  static Camera pinhole(double fovYDegrees, int imageWidth, int imageHeight);
  static Camera orthographic(int imageWidth, int imageHeight);

  CameraMode mode() const { return mode_; }
  double fov_y_degrees() const { return fovYDegrees_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  /// Unit vector from the surface point toward the camera.
  Vec3 view_direction(int px, int py) const;

 private:
  Camera(CameraMode mode, double fov, int w, int h) : mode_(mode), fovYDegrees_(fov), width_(w), height_(h) {}

  CameraMode mode_;
  double fovYDegrees_;
  int width_;
  int height_;
};

inline Vec3 view_direction(const Camera& camera, int px, int py) { return camera.view_direction(px, py); }

/// Per-pixel region ids for multi-material scenes.
class SegmentationMask {
 public:
  static constexpr std::uint16_t kBackground = 0xFFFF;

  SegmentationMask(int width, int height, std::vector<std::uint16_t> regionIds, int regionCount);
  /// regionCount = max id + 1 over non-background pixels.
  static SegmentationMask from_ids(int width, int height, std::vector<std::uint16_t> regionIds);

  int width() const { return width_; }
  int height() const { return height_; }
  int region_count() const { return regionCount_; }
  std::span<const std::uint16_t> region_ids() const { return ids_; }
  std::uint16_t at(int x, int y) const { return ids_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  int width_;
  int height_;
  std::vector<std::uint16_t> ids_;
  int regionCount_;
};

}  // namespace dsbrdf
