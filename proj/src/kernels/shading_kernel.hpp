#pragma once

// Internal: raw-array view of a scene shared by the parallel kernels, the
// serial reference and the finite-difference harness. Unlike RenderScene it
// does not validate, so perturbed (non-unit) normals or negative radiance can
// be fed through it.

#include <cstddef>
#include <span>
#include <vector>

#include "dsbrdf/grad.hpp"
#include "dsbrdf/render.hpp"

namespace dsbrdf::detail {

struct SceneView {
  int width = 0;
  int height = 0;
  std::span<const Vec3> normals;
  std::span<const std::uint8_t> mask;
  const Camera* camera = nullptr;
  const LightTable* lights = nullptr;
  std::span<const Rgb> radiance;
  std::span<const MaterialParams> materials;
  std::span<const std::uint16_t> regions;  // empty: single material

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  int region(std::size_t p) const { return regions.empty() ? 0 : static_cast<int>(regions[p]); }
  int region_count() const { return static_cast<int>(materials.size()); }
};

/// Owns the light table and raw material copies a SceneView points into.
struct SceneViewStorage {
  LightTable lights;
  std::vector<MaterialParams> materials;
};

SceneView make_view(const RenderScene& scene, SceneViewStorage& storage);

/// Parallel SIMD render into `out` (pixel_count entries). Returns the index of
/// the first foreground pixel whose BRDF exceeded kOverflowLimit, or -1.
std::ptrdiff_t render_kernel(const SceneView& view, std::span<Rgb> out);

/// Renders only the listed pixels; out[j] receives pixel pixels[j].
std::ptrdiff_t render_pixels_kernel(const SceneView& view, std::span<const std::size_t> pixels, std::span<Rgb> out);

/// Parallel backward pass. Gradient buffers for requested groups are resized
/// and overwritten. Non-finite results are left in place for the caller to report.
void backward_kernel(const SceneView& view, std::span<const Rgb> upstream, GradientGroups groups, SceneGradients& out);

/// Fused render + backward for the residual loss sum |render - target|^2 over
/// foreground pixels: writes the render into `image` (pixel_count entries) and
/// gradients of the loss for the requested groups into `out`. Returns the first
/// overflowing pixel or -1, like render_kernel.
std::ptrdiff_t residual_kernel(const SceneView& view, std::span<const Rgb> target, GradientGroups groups,
                               SceneGradients& out, std::span<Rgb> image);

/// Serial references. Both throw (kOverflow / kNonfiniteGradient) with the
/// offending pixel and light.
RadianceImage render_view_serial(const SceneView& view);
SceneGradients backward_view_serial(const SceneView& view, std::span<const Rgb> upstream, GradientGroups groups);

}  // namespace dsbrdf::detail
