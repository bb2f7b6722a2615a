#pragma once

#include <optional>
#include <vector>

#include "dsbrdf/brdf.hpp"
#include "dsbrdf/core.hpp"

namespace dsbrdf {

/// Incoming light direction and solid-angle weight for every environment texel,
/// in texel order i = h * widthL + w.
struct LightTable {
  int heightL = 0;
  int widthL = 0;
  std::vector<Vec3> directions;
  std::vector<double> weights;

  std::size_t size() const { return directions.size(); }
};

/// Texel-center angles theta = (h + 0.5) / heightL * pi, phi = (w + 0.5) / widthL * 2pi;
/// direction (cos phi sin theta, cos theta, sin phi sin theta); weight sin(theta) dtheta dphi.
LightTable build_light_table(int heightL, int widthL);

struct RenderScene {
  NormalMap normalMap;
  Camera camera;
  EnvironmentMap env;
  std::vector<DsbrdfMaterial> materials;
  std::optional<SegmentationMask> segmentation;

  /// Throws kShapeMismatch / kRegionCountMismatch / kInvalidArgument when members disagree.
  void validate() const;
  /// Material index of pixel (x, y); 0 when unsegmented.
  int region_of(int x, int y) const;
};

/// Discretized rendering sum, parallel over pixels. Output is bit-identical for
/// any worker count. Throws kOverflow (with pixel coordinates) if the BRDF runs away.
RadianceImage render(const RenderScene& scene);

/// Straightforward single-threaded evaluation through eval_f; the reference the
/// parallel kernel is tested against.
RadianceImage render_serial(const RenderScene& scene);

/// Render of the orthographic sphere normal map under (material, env).
RadianceImage render_reflectance_map(const DsbrdfMaterial& material, const EnvironmentMap& env, int sphereResolution);
RenderScene reflectance_map_scene(const DsbrdfMaterial& material, const EnvironmentMap& env, int sphereResolution);

}  // namespace dsbrdf
