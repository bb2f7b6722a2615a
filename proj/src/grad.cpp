#include "dsbrdf/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "kernels/shading_kernel.hpp"

namespace dsbrdf {

namespace {

void check_upstream(const detail::SceneView& view, const RadianceImage& upstream) {
  if (upstream.width != view.width || upstream.height != view.height ||
      upstream.pixels.size() != view.pixel_count()) {
    throw Error(ErrorCode::kShapeMismatch, "upstream gradient is " + std::to_string(upstream.width) + "x" +
                                               std::to_string(upstream.height) + ", image is " +
                                               std::to_string(view.width) + "x" + std::to_string(view.height));
  }
  for (const Rgb& u : upstream.pixels) {
    for (double c : u) {
      if (!std::isfinite(c)) throw Error(ErrorCode::kInvalidArgument, "upstream gradient must be finite");
    }
  }
}

bool all_finite(const SceneGradients& g) {
  for (const Vec3& v : g.dNormal) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) return false;
  }
  for (const Rgb& v : g.dEnv) {
    for (double c : v) {
      if (!std::isfinite(c)) return false;
    }
  }
  for (const auto& m : g.dMaterial) {
    for (double c : m) {
      if (!std::isfinite(c)) return false;
    }
  }
  return true;
}

}  // namespace

namespace detail {

SceneGradients backward_view_serial(const SceneView& view, std::span<const Rgb> upstream, GradientGroups groups) {
  const LightTable& lights = *view.lights;
  const std::size_t N = lights.size();
  SceneGradients out;
  out.dNormal.assign(groups.normal ? view.pixel_count() : 0, Vec3{});
  out.dEnv.assign(groups.light ? N : 0, Rgb{});
  out.dMaterial.assign(groups.material ? view.materials.size() : 0, MaterialParams{});
  std::vector<DsbrdfMaterial> materials(view.materials.size());
  for (std::size_t r = 0; r < materials.size(); ++r) materials[r].raw = view.materials[r];

  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * view.width + x;
      if (!view.mask[p]) continue;
      const Rgb& u = upstream[p];
      const Vec3 n = view.normals[p];
      const Vec3 wp = view.camera->view_direction(x, y);
      const int r = view.region(p);
      Vec3 dn{};
      for (std::size_t i = 0; i < N; ++i) {
        const Vec3& wi = lights.directions[i];
        const double c = dot(n, wi);
        if (!(c > 0.0)) continue;
        const HalfAngleGeometry geom = half_geometry(wi, wp, n);
        if (!geom.valid) continue;
        const double base = std::clamp(geom.hDotN, kBaseEpsilon, 1.0);
        const bool slope = geom.hDotN > kBaseEpsilon && geom.hDotN < 1.0;
        const double g = c * lights.weights[i];
        const Coefficients m = coeffs_at(materials[r], geom.thetaD);
        const spline::Basis b = spline::basis(geom.thetaD);
        const Rgb& L = view.radiance[i];

        for (int k = 0; k < kChannels; ++k) {
          double f = 0.0;
          double dfdb = 0.0;
          for (int s = 0; s < kLobes; ++s) {
            const double m0 = m[curve_index(k, s, 0)];
            const double m1 = m[curve_index(k, s, 1)];
            const double pw = std::pow(base, m1);
            const double e = std::exp(m0 * pw);
            f += std::expm1(m0 * pw);
            dfdb += e * m0 * m1 * std::pow(base, m1 - 1.0);
            if (groups.material) {
              const double dm0 = u[k] * L[k] * g * e * pw;
              const double dm1 = u[k] * L[k] * g * e * m0 * pw * std::log(base);
              for (int j = 0; j < spline::kControlPoints; ++j) {
                out.dMaterial[r][param_index(k, s, 0, j)] += dm0 * b[j];
                out.dMaterial[r][param_index(k, s, 1, j)] += dm1 * b[j];
              }
            }
          }
          if (groups.light) out.dEnv[i][k] += u[k] * f * g;
          if (groups.normal) {
            dn += (u[k] * L[k] * f * lights.weights[i]) * wi;
            if (slope) dn += (u[k] * L[k] * dfdb * g) * geom.half;
          }
          if (!std::isfinite(f) || !std::isfinite(dfdb) || !std::isfinite(dn.x + dn.y + dn.z)) {
            throw Error(ErrorCode::kNonfiniteGradient, "non-finite gradient at pixel (" + std::to_string(x) + ", " +
                                                           std::to_string(y) + ") light " + std::to_string(i));
          }
        }
      }
      if (groups.normal) out.dNormal[p] = dn;
    }
  }
  if (!all_finite(out)) throw Error(ErrorCode::kNonfiniteGradient, "non-finite gradient accumulated");
  return out;
}

}  // namespace detail

SceneGradients backward(const RenderScene& scene, const RadianceImage& upstream, GradientGroups groups) {
  detail::SceneViewStorage storage;
  const detail::SceneView view = detail::make_view(scene, storage);
  check_upstream(view, upstream);
  SceneGradients out;
  detail::backward_kernel(view, upstream.pixels, groups, out);
  if (!all_finite(out)) {
    // The reference pass names the offending pixel and light.
    detail::backward_view_serial(view, upstream.pixels, groups);
    throw Error(ErrorCode::kNonfiniteGradient, "non-finite gradient");
  }
  return out;
}

SceneGradients backward_serial(const RenderScene& scene, const RadianceImage& upstream, GradientGroups groups) {
  detail::SceneViewStorage storage;
  const detail::SceneView view = detail::make_view(scene, storage);
  check_upstream(view, upstream);
  return detail::backward_view_serial(view, upstream.pixels, groups);
}

const char* param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kLight: return "light";
    case ParamGroup::kNormal: return "normal";
    case ParamGroup::kMaterial: return "material";
  }
  return "unknown";
}

// ---------------------------------------------------------------- fd_check

namespace {

long double probe(std::span<const Rgb> upstream, std::span<const Rgb> image) {
  long double j = 0.0L;
  for (std::size_t p = 0; p < image.size(); ++p) {
    for (int k = 0; k < kChannels; ++k) j += static_cast<long double>(upstream[p][k]) * image[p][k];
  }
  return j;
}

long double probe_full(const detail::SceneView& view, std::span<const Rgb> upstream, std::vector<Rgb>& scratch) {
  if (detail::render_kernel(view, scratch) >= 0) throw Error(ErrorCode::kOverflow, "fd_check: BRDF overflow");
  return probe(upstream, scratch);
}

long double probe_pixel(const detail::SceneView& view, std::span<const Rgb> upstream, std::size_t p) {
  Rgb out{};
  const std::size_t idx[1] = {p};
  if (detail::render_pixels_kernel(view, idx, std::span<Rgb>(&out, 1)) >= 0) {
    throw Error(ErrorCode::kOverflow, "fd_check: BRDF overflow");
  }
  return probe(upstream.subspan(p, 1), std::span<const Rgb>(&out, 1));
}

// True when a normal step at pixel p could cross max(0, n.w) or the base clamp.
bool near_kink(const detail::SceneView& view, std::size_t p, double margin) {
  const Vec3 n = view.normals[p];
  const Vec3 wp = view.camera->view_direction(static_cast<int>(p % view.width), static_cast<int>(p / view.width));
  const LightTable& lights = *view.lights;
  for (std::size_t i = 0; i < lights.size(); ++i) {
    const double c = dot(n, lights.directions[i]);
    if (std::abs(c) < margin) return true;
    if (c <= 0.0) continue;
    const Vec3 sum = lights.directions[i] + wp;
    const double len = length(sum);
    if (len < 1e-8 + margin) return true;
    const double hd = dot(sum * (1.0 / len), n);
    if (std::abs(hd - kBaseEpsilon) < margin || std::abs(1.0 - hd) < margin) return true;
  }
  return false;
}

// True when texel i grazes some foreground pixel.
bool texel_near_kink(const detail::SceneView& view, std::size_t i, double margin) {
  const Vec3& w = view.lights->directions[i];
  for (std::size_t p = 0; p < view.pixel_count(); ++p) {
    if (view.mask[p] && std::abs(dot(view.normals[p], w)) < margin) return true;
  }
  return false;
}

struct Coordinate {
  std::size_t index;  // light texel, pixel or region
  int component;      // channel, axis or parameter
};

void record(FdReport& report, double analytic, double numeric, const std::string& name) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  const double rel = denom == 0.0 ? 0.0 : std::abs(analytic - numeric) / denom;
  ++report.checked;
  if (rel > report.maxRelError || report.worstCoordinate.empty() || std::isnan(rel)) {
    report.maxRelError = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
    report.worstCoordinate = name;
    report.worstAnalytic = analytic;
    report.worstNumeric = numeric;
  }
}

}  // namespace

FdReport fd_check(const RenderScene& scene, ParamGroup group, const FdOptions& options) {
  const double relStep =
      options.step.value_or(group == ParamGroup::kMaterial ? kDefaultMaterialStep : kDefaultNormalStep);
  if (options.step && (!(*options.step > 0.0) || !std::isfinite(*options.step))) {
    throw Error(ErrorCode::kInvalidArgument, "fd step must be positive");
  }
  if (options.trials < 1) throw Error(ErrorCode::kInvalidArgument, "fd trials must be at least 1");

  detail::SceneViewStorage storage;
  detail::SceneView view = detail::make_view(scene, storage);
  const std::size_t P = view.pixel_count();
  const std::size_t N = view.lights->size();

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  RadianceImage upstream(view.width, view.height);
  for (std::size_t p = 0; p < P; ++p) {
    if (!view.mask[p]) continue;
    for (int k = 0; k < kChannels; ++k) upstream.pixels[p][k] = uni(rng);
  }

  GradientGroups groups{false, false, false};
  groups.light = group == ParamGroup::kLight;
  groups.normal = group == ParamGroup::kNormal;
  groups.material = group == ParamGroup::kMaterial;
  const SceneGradients analytic = backward(scene, upstream, groups);

  std::vector<Coordinate> coords;
  if (group == ParamGroup::kLight) {
    for (std::size_t i = 0; i < N; ++i) {
      for (int k = 0; k < kChannels; ++k) coords.push_back({i, k});
    }
  } else if (group == ParamGroup::kNormal) {
    for (std::size_t p = 0; p < P; ++p) {
      if (!view.mask[p]) continue;
      for (int c = 0; c < 3; ++c) coords.push_back({p, c});
    }
  } else {
    for (std::size_t r = 0; r < view.materials.size(); ++r) {
      for (int j = 0; j < kMaterialParams; ++j) coords.push_back({r, j});
    }
  }
  std::shuffle(coords.begin(), coords.end(), rng);

  FdReport report;
  report.group = group;
  std::vector<Rgb> scratch(P);
  std::vector<Rgb> radiance(view.radiance.begin(), view.radiance.end());
  std::vector<Vec3> normals(view.normals.begin(), view.normals.end());
  std::vector<MaterialParams> materials(view.materials.begin(), view.materials.end());
  view.radiance = radiance;
  view.normals = normals;
  view.materials = materials;

  // Central difference of J in x; the step actually taken is recovered from
  // the rounded perturbed values.
  auto central = [&](double& x, double h, auto&& evaluate) -> long double {
    const double x0 = x;
    const double xp = x0 + h;
    const double xm = x0 - h;
    x = xp;
    const long double jp = evaluate();
    x = xm;
    const long double jm = evaluate();
    x = x0;
    const long double hEff = (static_cast<long double>(xp) - xm) / 2.0L;
    return (jp - jm) / (2.0L * hEff);
  };
  // One Richardson step on top of the central difference cancels the h^2
  // truncation term, which matters where high lobe exponents curve sharply.
  auto extrapolated = [&](double& x, double h, auto&& evaluate) {
    const long double d1 = central(x, h, evaluate);
    const long double d2 = central(x, h / 2.0, evaluate);
    return static_cast<double>((4.0L * d2 - d1) / 3.0L);
  };

  const char axes[3] = {'x', 'y', 'z'};
  const char channels[3] = {'r', 'g', 'b'};
  for (const Coordinate& co : coords) {
    if (report.checked >= options.trials) break;
    if (group == ParamGroup::kLight) {
      const std::size_t i = co.index;
      if (texel_near_kink(view, i, options.kinkMargin)) {
        ++report.skipped;
        continue;
      }
      double& x = radiance[i][co.component];
      const auto numeric = static_cast<double>(central(x, options.step.value_or(kDefaultLightStep),
                                     [&] { return probe_full(view, upstream.pixels, scratch); }));
      const int h = static_cast<int>(i / view.lights->widthL);
      const int w = static_cast<int>(i % view.lights->widthL);
      record(report, analytic.dEnv[i][co.component], numeric,
             "env(" + std::to_string(h) + "," + std::to_string(w) + ")." + channels[co.component]);
    } else if (group == ParamGroup::kNormal) {
      const std::size_t p = co.index;
      if (near_kink(view, p, options.kinkMargin)) {
        ++report.skipped;
        continue;
      }
      Vec3& n = normals[p];
      double& x = co.component == 0 ? n.x : (co.component == 1 ? n.y : n.z);
      const double numeric =
          extrapolated(x, relStep * std::max(1.0, std::abs(x)), [&] { return probe_pixel(view, upstream.pixels, p); });
      record(report, analytic.dNormal[p][co.component], numeric,
             "normal(" + std::to_string(p % view.width) + "," + std::to_string(p / view.width) + ")." +
                 axes[co.component]);
    } else {
      double& x = materials[co.index][co.component];
      const double numeric =
          extrapolated(x, relStep * std::max(1.0, std::abs(x)), [&] { return probe_full(view, upstream.pixels, scratch); });
      record(report, analytic.dMaterial[co.index][co.component], numeric,
             "material[" + std::to_string(co.index) + "][" + std::to_string(co.component) + "]");
    }
  }
  return report;
}

}  // namespace dsbrdf
