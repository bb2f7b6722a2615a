#pragma once

#include <array>
#include <span>

#include "dsbrdf/core.hpp"
#include "dsbrdf/spline.hpp"

namespace dsbrdf {

inline constexpr int kChannels = 3;
inline constexpr int kLobes = 3;
inline constexpr int kLobeCoeffs = 2;
inline constexpr int kCurves = kChannels * kLobes * kLobeCoeffs;  // 18
inline constexpr int kMaterialParams = kCurves * spline::kControlPoints;  // 108

/// Floor applied to max(0, h.n) before raising it to the lobe exponent.
inline constexpr double kBaseEpsilon = 1e-6;
/// Normalized parameters live in [-kNormBound, kNormBound].
inline constexpr double kNormBound = 0.95;
/// eval_f signals overflow above this value.
inline constexpr double kOverflowLimit = 1e30;

using MaterialParams = std::array<double, kMaterialParams>;
using Coefficients = std::array<double, kCurves>;

/// Curve index of coefficient t of lobe s in channel k.
constexpr int curve_index(int k, int s, int t) { return (k * kLobes + s) * kLobeCoeffs + t; }
/// Flat parameter index of control point j of curve (k, s, t).
constexpr int param_index(int k, int s, int t, int j) { return curve_index(k, s, t) * spline::kControlPoints + j; }

/// Default per-parameter normalization ranges: [-15, 15] for lobe scales
/// (t = 0), [0.05, 20] for lobe exponents (t = 1).
MaterialParams default_lower_bounds();
MaterialParams default_upper_bounds();

/// Directional-statistics BRDF with three exponential-power lobes per color
/// channel. Each lobe's scale and exponent vary with theta_d along a quadratic
/// B-spline, giving 3 x 3 x 2 x 6 = 108 raw parameters.
struct DsbrdfMaterial {
  MaterialParams raw{};
  MaterialParams lo = default_lower_bounds();
  MaterialParams hi = default_upper_bounds();

  /// All raw parameters zero, default ranges. Renders black.
  static DsbrdfMaterial zero() { return {}; }

  /// Throws kInvalidArgument unless raw values are finite and lo < hi everywhere.
  void validate() const;

  double& at(int k, int s, int t, int j) { return raw[param_index(k, s, t, j)]; }
  double at(int k, int s, int t, int j) const { return raw[param_index(k, s, t, j)]; }

  /// Sets all six control points of curve (k, s, t) to `value`.
  void set_constant_curve(int k, int s, int t, double value);
};

struct HalfAngleGeometry {
  Vec3 half;           // normalize(omegaI + omegaP); zero when invalid
  double hDotN = 0.0;  // clamp(h.n, 0, 1)
  double thetaD = 0.0; // acos(clamp(omegaI.h, 0, 1))
  bool valid = false;  // false iff |omegaI + omegaP| < 1e-8
};

HalfAngleGeometry half_geometry(const Vec3& omegaI, const Vec3& omegaP, const Vec3& n);

/// The 18 lobe coefficients m_{s,t}^k at theta_d, indexed by curve_index.
Coefficients coeffs_at(const DsbrdfMaterial& material, double thetaD);

/// f^k = sum_s exp(m_{s,0}^k * base^{m_{s,1}^k}) - 1 with base = clamp(h.n, kBaseEpsilon, 1).
/// Zero for invalid geometry; throws kOverflow if any channel exceeds kOverflowLimit.
Rgb eval_f(const DsbrdfMaterial& material, const HalfAngleGeometry& geom);

/// Affine map of each raw parameter from [lo, hi] onto [-0.95, 0.95]; out-of-range input is clamped.
MaterialParams normalize_params(const DsbrdfMaterial& material);
DsbrdfMaterial denormalize_params(std::span<const double, kMaterialParams> normed, const MaterialParams& lo,
                                  const MaterialParams& hi);

/// d raw / d normalized for each parameter: (hi - lo) / 1.9.
MaterialParams denormalize_jacobian(const MaterialParams& lo, const MaterialParams& hi);

}  // namespace dsbrdf
