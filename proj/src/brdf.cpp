#include "dsbrdf/brdf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsbrdf {

MaterialParams default_lower_bounds() {
  MaterialParams lo{};
  for (int c = 0; c < kCurves; ++c) {
    const bool exponent = (c % kLobeCoeffs) == 1;
    for (int j = 0; j < spline::kControlPoints; ++j) lo[c * spline::kControlPoints + j] = exponent ? 0.05 : -15.0;
  }
  return lo;
}

MaterialParams default_upper_bounds() {
  MaterialParams hi{};
  for (int c = 0; c < kCurves; ++c) {
    const bool exponent = (c % kLobeCoeffs) == 1;
    for (int j = 0; j < spline::kControlPoints; ++j) hi[c * spline::kControlPoints + j] = exponent ? 20.0 : 15.0;
  }
  return hi;
}

void DsbrdfMaterial::validate() const {
  for (int i = 0; i < kMaterialParams; ++i) {
    if (!std::isfinite(raw[i])) {
      throw Error(ErrorCode::kInvalidArgument, "material parameter " + std::to_string(i) + " is not finite");
    }
    if (!(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] < hi[i])) {
      throw Error(ErrorCode::kInvalidArgument, "material range " + std::to_string(i) + " needs lo < hi");
    }
  }
}

void DsbrdfMaterial::set_constant_curve(int k, int s, int t, double value) {
  for (int j = 0; j < spline::kControlPoints; ++j) at(k, s, t, j) = value;
}

HalfAngleGeometry half_geometry(const Vec3& omegaI, const Vec3& omegaP, const Vec3& n) {
  const Vec3 sum = omegaI + omegaP;
  const double len = length(sum);
  if (!(len >= 1e-8)) return {};
  const Vec3 h = sum * (1.0 / len);
  HalfAngleGeometry g;
  g.half = h;
  g.hDotN = std::clamp(dot(h, n), 0.0, 1.0);
  g.thetaD = std::acos(std::clamp(dot(omegaI, h), 0.0, 1.0));
  g.valid = true;
  return g;
}

Coefficients coeffs_at(const DsbrdfMaterial& material, double thetaD) {
  const spline::Basis b = spline::basis(thetaD);
  Coefficients out{};
  for (int c = 0; c < kCurves; ++c) {
    double v = 0.0;
    for (int j = 0; j < spline::kControlPoints; ++j) v += b[j] * material.raw[c * spline::kControlPoints + j];
    out[c] = v;
  }
  return out;
}

Rgb eval_f(const DsbrdfMaterial& material, const HalfAngleGeometry& geom) {
  if (!geom.valid) return {0.0, 0.0, 0.0};
  const Coefficients m = coeffs_at(material, geom.thetaD);
  const double base = std::clamp(geom.hDotN, kBaseEpsilon, 1.0);
  Rgb f{};
  for (int k = 0; k < kChannels; ++k) {
    double sum = 0.0;
    for (int s = 0; s < kLobes; ++s) {
      sum += std::expm1(m[curve_index(k, s, 0)] * std::pow(base, m[curve_index(k, s, 1)]));
    }
    if (!(std::abs(sum) <= kOverflowLimit)) {
      throw Error(ErrorCode::kOverflow, "BRDF channel " + std::to_string(k) + " evaluates to " + std::to_string(sum));
    }
    f[k] = sum;
  }
  return f;
}

MaterialParams normalize_params(const DsbrdfMaterial& material) {
  MaterialParams out{};
  for (int i = 0; i < kMaterialParams; ++i) {
    const double lo = material.lo[i];
    const double hi = material.hi[i];
    const double x = std::clamp(material.raw[i], lo, hi);
    out[i] = -kNormBound + 2.0 * kNormBound * (x - lo) / (hi - lo);
  }
  return out;
}

DsbrdfMaterial denormalize_params(std::span<const double, kMaterialParams> normed, const MaterialParams& lo,
                                  const MaterialParams& hi) {
  DsbrdfMaterial m;
  m.lo = lo;
  m.hi = hi;
  for (int i = 0; i < kMaterialParams; ++i) {
    const double y = std::clamp(normed[i], -kNormBound, kNormBound);
    m.raw[i] = lo[i] + (y + kNormBound) / (2.0 * kNormBound) * (hi[i] - lo[i]);
  }
  return m;
}

MaterialParams denormalize_jacobian(const MaterialParams& lo, const MaterialParams& hi) {
  MaterialParams out{};
  for (int i = 0; i < kMaterialParams; ++i) out[i] = (hi[i] - lo[i]) / (2.0 * kNormBound);
  return out;
}

}  // namespace dsbrdf
