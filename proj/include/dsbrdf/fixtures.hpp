#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dsbrdf/brdf.hpp"
#include "dsbrdf/core.hpp"
#include "dsbrdf/render.hpp"

// Procedural scenes: analytic normal maps, blob environment maps and a few
// canned materials.
namespace dsbrdf::fixtures {

/// Unit sphere seen orthographically: pixel center (u, v) in [-1, 1]^2 maps to
/// n = (u, -v, sqrt(1 - u^2 - v^2)) inside the disk, background outside.
NormalMap sphere_normal_map(int resolution);

/// Every pixel foreground with the same normal.
NormalMap plane_normal_map(int resolution, const Vec3& n);

struct Blob {
  Vec3 direction;
  double sigma = 0.3;  // radians
  Rgb rgb{};
};

/// radiance = sum over blobs of rgb * exp(-angle(texel, blob)^2 / (2 sigma^2)).
EnvironmentMap gaussian_blob_env(int heightL, int widthL, const std::vector<Blob>& blobs);

/// Key light, cool fill and a faint ambient term.
std::vector<Blob> studio_blobs();
EnvironmentMap studio_env(int heightL = EnvironmentMap::kDefaultHeight, int widthL = EnvironmentMap::kDefaultWidth);

using NamedMaterial = std::pair<std::string, DsbrdfMaterial>;

/// "zero", "matte", "glossy", "two-tone-a", "two-tone-b".
std::vector<NamedMaterial> preset_materials();
DsbrdfMaterial preset(const std::string& name);

/// Left half of the sphere region 0, right half region 1.
SegmentationMask split_segmentation(const NormalMap& normals);

/// 16x16 orthographic glossy sphere under an 8x16 studio environment.
RenderScene gradcheck_scene();

/// Writes the fixture set (normal maps, environments, materials, segmentation)
/// into `dir`. Deterministic: repeated calls produce identical bytes.
void write_fixture_set(const std::filesystem::path& dir);

}  // namespace dsbrdf::fixtures
