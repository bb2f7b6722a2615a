#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <numeric>

#include "dsbrdf/fixtures.hpp"
#include "dsbrdf/render.hpp"
#include "oracles.hpp"
#include "random_scene.hpp"

namespace dsbrdf {
namespace {

DsbrdfMaterial three_unit_lobes() {
  DsbrdfMaterial m;
  for (int k = 0; k < kChannels; ++k) {
    for (int s = 0; s < kLobes; ++s) {
      m.set_constant_curve(k, s, 0, std::log(2.0));
      m.set_constant_curve(k, s, 1, 0.0);
    }
  }
  return m;
}

double rel_diff(const RadianceImage& a, const RadianceImage& b) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.pixels.size(); ++p) {
    for (int k = 0; k < 3; ++k) {
      const double d = std::abs(a.pixels[p][k] - b.pixels[p][k]);
      const double s = std::max(std::abs(a.pixels[p][k]), std::abs(b.pixels[p][k]));
      if (d > 0.0) worst = std::max(worst, d / s);
    }
  }
  return worst;
}

TEST(LightTable, HandEvaluatedTexel) {
  const LightTable t = build_light_table(2, 4);
  ASSERT_EQ(t.size(), 8u);
  EXPECT_NEAR(t.directions[0].x, 0.5, 1e-12);
  EXPECT_NEAR(t.directions[0].y, 0.70711, 1e-5);
  EXPECT_NEAR(t.directions[0].z, 0.5, 1e-12);
  EXPECT_NEAR(t.weights[0], 1.744716, 1e-6);  // sin(pi/4) * (pi/2)^2
}

TEST(LightTable, UnitDirectionsAndFullSphere) {
  const LightTable t = build_light_table(64, 128);
  for (const Vec3& d : t.directions) EXPECT_NEAR(length(d), 1.0, 1e-9);
  const double total = std::accumulate(t.weights.begin(), t.weights.end(), 0.0);
  EXPECT_NEAR(total, 12.567632, 1e-6);
  EXPECT_NEAR(total, 4.0 * kPi, 0.01 * 4.0 * kPi);
}

TEST(Render, ZeroEnvironmentIsBlack) {
  const RenderScene s = testing::random_scene(1);
  RenderScene z = s;
  z.env = EnvironmentMap::zeros(s.env.height(), s.env.width());
  for (const Rgb& p : render(z).pixels) EXPECT_EQ(p, (Rgb{0, 0, 0}));
}

TEST(Render, SingleLitTexel) {
  const int HL = 4, WL = 8;
  const LightTable t = build_light_table(HL, WL);
  const int lit = 9;  // h = 1, w = 1
  std::vector<Rgb> rad(HL * WL, Rgb{0, 0, 0});
  rad[lit] = {1, 1, 1};
  const RenderScene s{NormalMap(1, 1, {t.directions[lit]}, {1}), Camera::orthographic(1, 1),
                      EnvironmentMap(HL, WL, rad), {three_unit_lobes()}, std::nullopt};
  const RadianceImage img = render(s);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(img.pixels[0][k], 3.0 * t.weights[lit], 1e-12);
}

TEST(Render, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    testing::RandomSceneOptions o;
    o.envHeight = 4;
    o.envWidth = 8;
    o.regions = 1 + static_cast<int>(seed % 3);
    const RenderScene s = testing::random_scene(seed, o);
    EXPECT_LT(rel_diff(render(s), oracle::render(s)), 1e-10) << seed;
  }
}

TEST(Render, SerialReferenceAgrees) {
  for (std::uint64_t seed = 1; seed < 6; ++seed) {
    testing::RandomSceneOptions o;
    o.regions = 2;
    const RenderScene s = testing::random_scene(seed, o);
    EXPECT_LT(rel_diff(render(s), render_serial(s)), 1e-12);
  }
}

TEST(Render, SharedExponentPathAgreesWithSerial) {
  const RenderScene s{fixtures::sphere_normal_map(12), Camera::pinhole(40, 12, 12), fixtures::studio_env(8, 16),
                      {fixtures::preset("glossy")}, std::nullopt};
  EXPECT_LT(rel_diff(render(s), render_serial(s)), 1e-12);
  EXPECT_LT(rel_diff(render(s), oracle::render(s)), 1e-10);
}

TEST(Render, SingleRegionSegmentationIsBitIdentical) {
  const RenderScene s = testing::random_scene(7);
  RenderScene seg = s;
  std::vector<std::uint16_t> ids(s.normalMap.size(), SegmentationMask::kBackground);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (s.normalMap.mask()[p]) ids[p] = 0;
  }
  seg.segmentation = SegmentationMask(s.normalMap.width(), s.normalMap.height(), ids, 1);
  EXPECT_EQ(render(s), render(seg));
}

TEST(Render, LinearInIllumination) {
  RenderScene s = testing::random_scene(8);
  const RenderScene s2 = testing::random_scene(9);
  const EnvironmentMap L1 = s.env;
  const EnvironmentMap L2 = s2.env;
  const double alpha = 0.7, beta = 1.9;
  std::vector<Rgb> mix(L1.size());
  for (std::size_t i = 0; i < mix.size(); ++i) {
    for (int k = 0; k < 3; ++k) mix[i][k] = alpha * L1.radiance()[i][k] + beta * L2.radiance()[i][k];
  }
  const RadianceImage a = render(s);
  s.env = L2;
  const RadianceImage b = render(s);
  s.env = EnvironmentMap(L1.height(), L1.width(), mix);
  const RadianceImage c = render(s);
  for (std::size_t p = 0; p < c.pixels.size(); ++p) {
    for (int k = 0; k < 3; ++k) {
      const double e = alpha * a.pixels[p][k] + beta * b.pixels[p][k];
      EXPECT_LE(std::abs(c.pixels[p][k] - e), 1e-9 * std::max(std::abs(e), 1e-300));
    }
  }
}

TEST(Render, ScalingByPowerOfTwoIsExact) {
  RenderScene s = testing::random_scene(10);
  const RadianceImage a = render(s);
  s.env = s.env.scaled(4.0);
  const RadianceImage b = render(s);
  for (std::size_t p = 0; p < a.pixels.size(); ++p) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(b.pixels[p][k], 4.0 * a.pixels[p][k]);
  }
}

TEST(Render, BackgroundIsBlack) {
  const RenderScene s = testing::random_scene(11);
  const RadianceImage img = render(s);
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    if (!s.normalMap.mask()[p]) EXPECT_EQ(img.pixels[p], (Rgb{0, 0, 0}));
  }
}

TEST(Render, AllBackfacingLightsGiveBlack) {
  // Light only in the lower hemisphere (y < 0); normal points up.
  const int HL = 8, WL = 16;
  std::vector<Rgb> rad(HL * WL, Rgb{0, 0, 0});
  for (int h = HL / 2; h < HL; ++h) {
    for (int w = 0; w < WL; ++w) rad[h * WL + w] = {1, 1, 1};
  }
  const RenderScene s{NormalMap(1, 1, {{0, 1, 0}}, {1}), Camera::orthographic(1, 1), EnvironmentMap(HL, WL, rad),
                      {fixtures::preset("glossy")}, std::nullopt};
  EXPECT_EQ(render(s).pixels[0], (Rgb{0, 0, 0}));
}

TEST(Render, BitIdenticalAcrossThreadCounts) {
  testing::RandomSceneOptions o;
  o.width = 24;
  o.height = 20;
  o.regions = 3;
  const RenderScene s = testing::random_scene(12, o);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const RadianceImage one = render(s);
  omp_set_num_threads(5);
  const RadianceImage five = render(s);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, five);
}

TEST(Render, OverflowReportsPixel) {
  DsbrdfMaterial m;
  m.lo.fill(-100.0);
  m.hi.fill(100.0);
  m.set_constant_curve(0, 0, 0, 80.0);
  const RenderScene s{fixtures::plane_normal_map(2, {0, 0, 1}), Camera::orthographic(2, 2), fixtures::studio_env(4, 8),
                      {m}, std::nullopt};
  try {
    render(s);
    FAIL() << "expected overflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflow);
    EXPECT_NE(std::string(e.what()).find("pixel"), std::string::npos);
  }
}

TEST(RenderScene, RegionCountMismatch) {
  testing::RandomSceneOptions o;
  o.regions = 2;
  RenderScene s = testing::random_scene(13, o);
  s.materials.pop_back();
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRegionCountMismatch);
  }
}

TEST(RenderScene, ShapeMismatch) {
  RenderScene s = testing::random_scene(14);
  s.camera = Camera::orthographic(3, 3);
  EXPECT_THROW(render(s), Error);
}

TEST(ReflectanceMap, ZeroEnvironmentIsBlackDisk) {
  const RadianceImage img = render_reflectance_map(fixtures::preset("glossy"), EnvironmentMap::zeros(8, 16), 9);
  for (const Rgb& p : img.pixels) EXPECT_EQ(p, (Rgb{0, 0, 0}));
}

TEST(ReflectanceMap, EqualsSphereRender) {
  const EnvironmentMap env = fixtures::studio_env(8, 16);
  const DsbrdfMaterial m = fixtures::preset("two-tone-a");
  const RadianceImage a = render_reflectance_map(m, env, 10);
  const RadianceImage b = render(RenderScene{fixtures::sphere_normal_map(10), Camera::orthographic(10, 10), env, {m},
                                             std::nullopt});
  EXPECT_EQ(a, b);
}

TEST(ReflectanceMap, ConstantEnvironmentApex) {
  const double c = 0.8;
  const int HL = 64, WL = 128;
  const EnvironmentMap env(HL, WL, std::vector<Rgb>(HL * WL, Rgb{c, c, c}));
  const RadianceImage img = render_reflectance_map(three_unit_lobes(), env, 9);
  const Rgb apex = img.at(4, 4);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(apex[k], 3.0 * c * kPi, 0.01 * 3.0 * c * kPi);
}

TEST(ReflectanceMap, TooSmall) { EXPECT_THROW(render_reflectance_map(DsbrdfMaterial::zero(), EnvironmentMap::zeros(4, 8), 7), Error); }

}  // namespace
}  // namespace dsbrdf
