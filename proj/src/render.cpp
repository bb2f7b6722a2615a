#include "dsbrdf/render.hpp"

#include <cmath>
#include <string>

#include "dsbrdf/fixtures.hpp"
#include "kernels/shading_kernel.hpp"

namespace dsbrdf {

LightTable build_light_table(int heightL, int widthL) {
  if (heightL < 1 || widthL < 1) {
    throw Error(ErrorCode::kInvalidArgument, "environment map dimensions must be at least 1x1");
  }
  LightTable t;
  t.heightL = heightL;
  t.widthL = widthL;
  const auto n = static_cast<std::size_t>(heightL) * widthL;
  t.directions.reserve(n);
  t.weights.reserve(n);
  const double dTheta = kPi / heightL;
  const double dPhi = 2.0 * kPi / widthL;
  for (int h = 0; h < heightL; ++h) {
    const double theta = (h + 0.5) * dTheta;
    const double sinT = std::sin(theta);
    const double cosT = std::cos(theta);
    for (int w = 0; w < widthL; ++w) {
      const double phi = (w + 0.5) * dPhi;
      t.directions.push_back({std::cos(phi) * sinT, cosT, std::sin(phi) * sinT});
      t.weights.push_back(sinT * dTheta * dPhi);
    }
  }
  return t;
}

void RenderScene::validate() const {
  const int w = normalMap.width();
  const int h = normalMap.height();
  if (camera.image_width() != w || camera.image_height() != h) {
    throw Error(ErrorCode::kShapeMismatch, "camera image size " + std::to_string(camera.image_width()) + "x" +
                                               std::to_string(camera.image_height()) + " does not match normal map " +
                                               std::to_string(w) + "x" + std::to_string(h));
  }
  if (materials.empty()) throw Error(ErrorCode::kRegionCountMismatch, "scene has no material");
  for (const auto& m : materials) m.validate();
  if (!segmentation) {
    if (materials.size() != 1) {
      throw Error(ErrorCode::kRegionCountMismatch,
                  "unsegmented scene expects 1 material, got " + std::to_string(materials.size()));
    }
    return;
  }
  if (segmentation->width() != w || segmentation->height() != h) {
    throw Error(ErrorCode::kShapeMismatch, "segmentation size does not match normal map");
  }
  if (static_cast<std::size_t>(segmentation->region_count()) != materials.size()) {
    throw Error(ErrorCode::kRegionCountMismatch, "expected " + std::to_string(segmentation->region_count()) +
                                                     " materials, got " + std::to_string(materials.size()));
  }
  const auto ids = segmentation->region_ids();
  const auto mask = normalMap.mask();
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (mask[p] && ids[p] == SegmentationMask::kBackground) {
      throw Error(ErrorCode::kInvalidArgument, "foreground pixel " + std::to_string(p) + " has no region id");
    }
  }
}

int RenderScene::region_of(int x, int y) const {
  if (!segmentation) return 0;
  const std::uint16_t id = segmentation->at(x, y);
  return id == SegmentationMask::kBackground ? 0 : id;
}

namespace detail {

SceneView make_view(const RenderScene& scene, SceneViewStorage& storage) {
  scene.validate();
  storage.lights = build_light_table(scene.env.height(), scene.env.width());
  storage.materials.clear();
  for (const auto& m : scene.materials) storage.materials.push_back(m.raw);
  SceneView v;
  v.width = scene.normalMap.width();
  v.height = scene.normalMap.height();
  v.normals = scene.normalMap.normals();
  v.mask = scene.normalMap.mask();
  v.camera = &scene.camera;
  v.lights = &storage.lights;
  v.radiance = scene.env.radiance();
  v.materials = storage.materials;
  if (scene.segmentation) v.regions = scene.segmentation->region_ids();
  return v;
}

RadianceImage render_view_serial(const SceneView& view) {
  RadianceImage img(view.width, view.height);
  const LightTable& lights = *view.lights;
  std::vector<DsbrdfMaterial> materials(view.materials.size());
  for (std::size_t r = 0; r < materials.size(); ++r) materials[r].raw = view.materials[r];

  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * view.width + x;
      if (!view.mask[p]) continue;
      const Vec3 n = view.normals[p];
      const Vec3 wp = view.camera->view_direction(x, y);
      const DsbrdfMaterial& material = materials[view.region(p)];
      Rgb acc{};
      for (std::size_t i = 0; i < lights.size(); ++i) {
        const double c = dot(n, lights.directions[i]);
        if (!(c > 0.0)) continue;
        const HalfAngleGeometry geom = half_geometry(lights.directions[i], wp, n);
        Rgb f;
        try {
          f = eval_f(material, geom);
        } catch (const Error& e) {
          throw Error(e.code(), "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") light " +
                                    std::to_string(i) + ": " + e.what());
        }
        for (int k = 0; k < kChannels; ++k) acc[k] += f[k] * view.radiance[i][k] * c * lights.weights[i];
      }
      img.pixels[p] = acc;
    }
  }
  return img;
}

}  // namespace detail

RadianceImage render(const RenderScene& scene) {
  detail::SceneViewStorage storage;
  const detail::SceneView view = detail::make_view(scene, storage);
  RadianceImage img(view.width, view.height);
  const std::ptrdiff_t bad = detail::render_kernel(view, img.pixels);
  if (bad >= 0) {
    // Re-run the reference on that pixel alone to report the offending light.
    detail::SceneView one = view;
    std::vector<std::uint8_t> mask(view.pixel_count(), 0);
    mask[static_cast<std::size_t>(bad)] = 1;
    one.mask = mask;
    detail::render_view_serial(one);
    throw Error(ErrorCode::kOverflow, "BRDF overflow at pixel " + std::to_string(bad));
  }
  return img;
}

RadianceImage render_serial(const RenderScene& scene) {
  detail::SceneViewStorage storage;
  return detail::render_view_serial(detail::make_view(scene, storage));
}

RenderScene reflectance_map_scene(const DsbrdfMaterial& material, const EnvironmentMap& env, int sphereResolution) {
  if (sphereResolution < 8) throw Error(ErrorCode::kTooSmall, "reflectance map resolution must be at least 8");
  return RenderScene{fixtures::sphere_normal_map(sphereResolution),
                     Camera::orthographic(sphereResolution, sphereResolution), env, {material}, std::nullopt};
}

RadianceImage render_reflectance_map(const DsbrdfMaterial& material, const EnvironmentMap& env, int sphereResolution) {
  return render(reflectance_map_scene(material, env, sphereResolution));
}

}  // namespace dsbrdf
