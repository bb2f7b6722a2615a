#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsbrdf/render.hpp"

namespace dsbrdf {

/// dLoss/d(normal map), dLoss/d(environment map), dLoss/d(raw material
/// parameters) for one scalar loss. Groups that were not requested are empty.
struct SceneGradients {
  std::vector<Vec3> dNormal;               // one per pixel, zero on background
  std::vector<Rgb> dEnv;                   // one per environment texel
  std::vector<MaterialParams> dMaterial;   // one per region
};

struct GradientGroups {
  bool normal = true;
  bool light = true;
  bool material = true;
};

/// Back-propagates an image-shaped upstream gradient dLoss/dI through the
/// rendering sum. Parallel over image rows with per-row accumulators reduced in
/// row order, so results do not depend on the worker count.
/// Throws kShapeMismatch on a mis-sized upstream, kNonfiniteGradient on NaN/Inf.
SceneGradients backward(const RenderScene& scene, const RadianceImage& upstream, GradientGroups groups = {});

/// Single-threaded reference evaluation of the same derivatives.
SceneGradients backward_serial(const RenderScene& scene, const RadianceImage& upstream, GradientGroups groups = {});

enum class ParamGroup { kLight, kNormal, kMaterial };

const char* param_group_name(ParamGroup group);

/// Default light step. The probe is exactly linear in radiance, so a large
/// step costs no truncation error and keeps roundoff far below the signal.
inline constexpr double kDefaultLightStep = 1.0;
/// Default normal and material steps, scaled by max(1, |x|). Material
/// derivatives can be tiny next to the probe value, so their step is larger;
/// the extrapolated difference keeps truncation error negligible.
inline constexpr double kDefaultNormalStep = 1e-4;
inline constexpr double kDefaultMaterialStep = 1e-3;

struct FdOptions {
  std::optional<double> step;  // unset: the per-group defaults above; one value overrides all
  int trials = 32;             // coordinates probed (all of them when >= group size)
  std::uint64_t seed = 1;
  /// Coordinates whose step could cross a kink are skipped: pixels (normal
  /// group) or texels (light group) with any |n.w_i| below this margin, and
  /// lit configurations with h.n within it of the base clamp or of 1.
  double kinkMargin = 1e-3;
};

struct FdReport {
  ParamGroup group = ParamGroup::kLight;
  double maxRelError = 0.0;
  std::string worstCoordinate;
  double worstAnalytic = 0.0;
  double worstNumeric = 0.0;
  int checked = 0;
  int skipped = 0;
};

/// Compares backward() against central differences of the probe loss
/// J = sum(upstream * render) for a seeded random upstream. Relative error per
/// coordinate is |a - d| / max(|a|, |d|), 0 when both vanish.
FdReport fd_check(const RenderScene& scene, ParamGroup group, const FdOptions& options);

}  // namespace dsbrdf
