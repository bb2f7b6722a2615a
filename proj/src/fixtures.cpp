#include "dsbrdf/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "dsbrdf/io.hpp"

namespace dsbrdf::fixtures {

NormalMap sphere_normal_map(int resolution) {
  if (resolution < 8) throw Error(ErrorCode::kTooSmall, "sphere resolution must be at least 8");
  const auto n = static_cast<std::size_t>(resolution) * resolution;
  std::vector<Vec3> normals(n);
  std::vector<std::uint8_t> mask(n, 0);
  for (int py = 0; py < resolution; ++py) {
    const double v = 2.0 * (py + 0.5) / resolution - 1.0;
    for (int px = 0; px < resolution; ++px) {
      const double u = 2.0 * (px + 0.5) / resolution - 1.0;
      const double r2 = u * u + v * v;
      if (r2 > 1.0) continue;
      const std::size_t p = static_cast<std::size_t>(py) * resolution + px;
      normals[p] = normalize(Vec3{u, -v, std::sqrt(1.0 - r2)});
      mask[p] = 1;
    }
  }
  return NormalMap(resolution, resolution, std::move(normals), std::move(mask));
}

NormalMap plane_normal_map(int resolution, const Vec3& n) {
  if (resolution < 1) throw Error(ErrorCode::kInvalidArgument, "plane resolution must be positive");
  const auto count = static_cast<std::size_t>(resolution) * resolution;
  return NormalMap(resolution, resolution, std::vector<Vec3>(count, n), std::vector<std::uint8_t>(count, 1));
}

EnvironmentMap gaussian_blob_env(int heightL, int widthL, const std::vector<Blob>& blobs) {
  std::vector<Blob> unit = blobs;
  for (auto& b : unit) {
    if (!(b.sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "blob sigma must be positive");
    for (double c : b.rgb) {
      if (!(c >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "blob color must be nonnegative");
    }
    b.direction = normalize(b.direction);
  }
  const LightTable table = build_light_table(heightL, widthL);
  std::vector<Rgb> radiance(table.size(), Rgb{});
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (const auto& b : unit) {
      const double angle = std::acos(std::clamp(dot(table.directions[i], b.direction), -1.0, 1.0));
      const double falloff = std::exp(-angle * angle / (2.0 * b.sigma * b.sigma));
      for (int k = 0; k < 3; ++k) radiance[i][k] += b.rgb[k] * falloff;
    }
  }
  return EnvironmentMap(heightL, widthL, std::move(radiance));
}

std::vector<Blob> studio_blobs() {
  return {
      {{0.45, 0.65, 0.6}, 0.22, {6.0, 5.6, 5.0}},
      {{-0.7, 0.1, 0.45}, 0.45, {0.9, 1.1, 1.5}},
      {{0.0, 1.0, 0.0}, 100.0, {0.12, 0.12, 0.14}},
  };
}

EnvironmentMap studio_env(int heightL, int widthL) { return gaussian_blob_env(heightL, widthL, studio_blobs()); }

namespace {

DsbrdfMaterial matte(const Rgb& albedo) {
  DsbrdfMaterial m;
  for (int k = 0; k < kChannels; ++k) {
    m.set_constant_curve(k, 0, 0, albedo[k]);
    m.set_constant_curve(k, 1, 0, 0.3 * albedo[k]);
    m.set_constant_curve(k, 2, 0, 0.1 * albedo[k]);
    for (int s = 0; s < kLobes; ++s) m.set_constant_curve(k, s, 1, 1.0);
  }
  return m;
}

// Diffuse base, a sharp specular lobe that brightens toward grazing theta_d and
// a broad sheen.
DsbrdfMaterial glossy(const Rgb& diffuse, double specular, double exponent) {
  DsbrdfMaterial m;
  for (int k = 0; k < kChannels; ++k) {
    m.set_constant_curve(k, 0, 0, diffuse[k]);
    m.set_constant_curve(k, 0, 1, 1.0);
    for (int j = 0; j < spline::kControlPoints; ++j) {
      m.at(k, 1, 0, j) = specular * (1.0 + 0.06 * j);
      m.at(k, 1, 1, j) = exponent * (1.0 - 0.02 * j);
    }
    m.set_constant_curve(k, 2, 0, 0.25 * specular / 2.0);
    m.set_constant_curve(k, 2, 1, 4.0);
  }
  return m;
}

}  // namespace

std::vector<NamedMaterial> preset_materials() {
  return {
      {"zero", DsbrdfMaterial::zero()},
      {"matte", matte({0.30, 0.24, 0.18})},
      {"glossy", glossy({0.12, 0.10, 0.08}, 2.0, 18.0)},
      {"two-tone-a", glossy({0.35, 0.08, 0.05}, 0.8, 6.0)},
      {"two-tone-b", glossy({0.04, 0.10, 0.30}, 1.6, 14.0)},
  };
}

DsbrdfMaterial preset(const std::string& name) {
  for (auto& [n, m] : preset_materials()) {
    if (n == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown preset material '" + name + "'");
}

SegmentationMask split_segmentation(const NormalMap& normals) {
  std::vector<std::uint16_t> ids(normals.size(), SegmentationMask::kBackground);
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      if (normals.foreground(x, y)) ids[normals.index(x, y)] = (2 * x < normals.width()) ? 0 : 1;
    }
  }
  return SegmentationMask(normals.width(), normals.height(), std::move(ids), 2);
}

RenderScene gradcheck_scene() {
  return RenderScene{sphere_normal_map(16), Camera::orthographic(16, 16), studio_env(8, 16), {preset("glossy")},
                     std::nullopt};
}

void write_fixture_set(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "materials");
  const NormalMap sphere = sphere_normal_map(64);
  io::write_normal_png16(dir / "sphere_normals.png", sphere);
  io::write_normal_png16(dir / "plane_normals.png", plane_normal_map(32, {0.0, 0.0, 1.0}));
  io::write_segmentation_png(dir / "sphere_split.png", split_segmentation(sphere));
  io::write_pfm(dir / "env_studio.pfm", studio_env());
  io::write_pfm(dir / "env_zero.pfm", EnvironmentMap::zeros());
  io::write_pfm(dir / "env_constant.pfm", gaussian_blob_env(EnvironmentMap::kDefaultHeight, EnvironmentMap::kDefaultWidth,
                                                            {{{0.0, 1.0, 0.0}, 100.0, {1.0, 1.0, 1.0}}}));
  for (const auto& [name, material] : preset_materials()) {
    io::write_material(dir / "materials" / (name + ".json"), io::MaterialFile{material, name});
  }
}

}  // namespace dsbrdf::fixtures
