#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsbrdf/fixtures.hpp"
#include "dsbrdf/invert.hpp"
#include "random_scene.hpp"

namespace dsbrdf {
namespace {

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

NormalMap single(const Vec3& n) { return NormalMap(1, 1, {n}, {1}); }

NormalMap jitter_normals(const NormalMap& n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Vec3> out(n.normals().begin(), n.normals().end());
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (n.mask()[p]) out[p] = normalize(out[p] + Vec3{g(rng), g(rng), g(rng)});
  }
  return NormalMap(n.width(), n.height(), out, std::vector<std::uint8_t>(n.mask().begin(), n.mask().end()));
}

InverseProblem problem_from(const RenderScene& gt, const SceneState& init, GradientGroups free) {
  return InverseProblem{render(gt), init, 1.0, 10.0, gt.camera, gt.segmentation, free};
}

SceneState state_of(const RenderScene& s) { return SceneState{s.normalMap, s.materials, s.env}; }

RenderScene small_sphere(const std::string& material) {
  return RenderScene{fixtures::sphere_normal_map(12), Camera::orthographic(12, 12), fixtures::studio_env(8, 16),
                     {fixtures::preset(material)}, std::nullopt};
}

TEST(Loss, NormalExamples) {
  EXPECT_EQ(loss_normal(single({0, 0, 1}), single({0, 0, 1})), 0.0);
  EXPECT_EQ(loss_normal(single({0, 0, 1}), single({0, 0, -1})), 4.0);
  EXPECT_EQ(loss_normal(single({0, 0, 1}), single({1, 0, 0})), 2.0);
}

TEST(Loss, NormalMatchesCosineIdentity) {
  const NormalMap a = fixtures::sphere_normal_map(10);
  const NormalMap b = jitter_normals(a, 0.3, 1);
  double expected = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (a.mask()[p]) expected += 2.0 - 2.0 * dot(a.normals()[p], b.normals()[p]);
  }
  EXPECT_NEAR(loss_normal(a, b), expected, 1e-12 * expected);
}

TEST(Loss, NormalShapeMismatch) {
  EXPECT_THROW(loss_normal(fixtures::sphere_normal_map(8), fixtures::sphere_normal_map(9)), Error);
  EXPECT_THROW(loss_normal(fixtures::sphere_normal_map(8), fixtures::plane_normal_map(8, {0, 0, 1})), Error);
}

TEST(Loss, MaterialExamples) {
  std::vector<double> a(108, -0.95), b(108, 0.95);
  EXPECT_EQ(loss_material(a, a), 0.0);
  EXPECT_NEAR(loss_material(a, b), 389.88, 1e-9);
  std::vector<double> c = a;
  c[17] += 0.25;
  EXPECT_DOUBLE_EQ(loss_material(a, c), 0.0625);
  EXPECT_THROW(loss_material(a, std::vector<double>(107, 0.0)), Error);
}

TEST(Loss, CombinedExamples) {
  EXPECT_EQ(loss_combined({}, 0, 0, 0), 0.0);
  EXPECT_EQ(loss_combined({}, 1, 1, 1), 11001.0);
  EXPECT_EQ(loss_combined({1, 1, 1}, 2, 3, 4), 9.0);
}

TEST(Objective, ZeroAtGroundTruth) {
  testing::RandomSceneOptions o;
  o.regions = 2;
  const RenderScene s = testing::random_scene(3, o);
  const ObjectiveValue v = objective(problem_from(s, state_of(s), {}), state_of(s));
  EXPECT_EQ(v.value, 0.0);
  for (const Vec3& g : v.gradients.dNormal) EXPECT_EQ(g, (Vec3{}));
  for (const Rgb& g : v.gradients.dEnv) EXPECT_EQ(g, (Rgb{0, 0, 0}));
  for (const MaterialParams& m : v.gradients.dMaterial) {
    for (double g : m) EXPECT_EQ(g, 0.0);
  }
}

TEST(Objective, OnlyFreeGroupsReturned) {
  const RenderScene s = testing::random_scene(4);
  const ObjectiveValue v = objective(problem_from(s, state_of(s), {false, true, false}), state_of(s));
  EXPECT_TRUE(v.gradients.dNormal.empty());
  EXPECT_TRUE(v.gradients.dMaterial.empty());
  EXPECT_EQ(v.gradients.dEnv.size(), s.env.size());
}

TEST(Objective, ValueIncludesRegularizers) {
  const RenderScene gt = testing::random_scene(5);
  SceneState init = state_of(gt);
  init.env = gt.env.scaled(1.5);
  InverseProblem pb = problem_from(gt, init, {});
  pb.a = 0.0;
  pb.b = 0.0;
  const double withoutPrior = objective(pb, state_of(gt)).value;
  EXPECT_EQ(withoutPrior, 0.0);
  pb.b = 2.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < gt.env.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double d = gt.env.radiance()[i][k] - init.env.radiance()[i][k];
      expected += 2.0 * d * d;
    }
  }
  EXPECT_NEAR(objective(pb, state_of(gt)).value, expected, 1e-12 * expected);
}

// Objective derivatives against central differences: env and material
// coordinates directly, normals along a tangent direction of the unit sphere.
TEST(Objective, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    testing::RandomSceneOptions o;
    o.regions = 1 + static_cast<int>(seed % 2);
    const RenderScene gt = testing::random_scene(seed, o);
    SceneState init = state_of(gt);
    init.normals = jitter_normals(gt.normalMap, 0.05, seed);
    init.env = gt.env.scaled(0.8);
    const InverseProblem pb = problem_from(gt, init, {});

    SceneState x = state_of(gt);
    x.normals = jitter_normals(gt.normalMap, 0.05, seed + 100);
    std::vector<Rgb> rad(gt.env.radiance().begin(), gt.env.radiance().end());
    for (Rgb& c : rad) {
      for (double& v : c) v *= 1.1;
    }
    x.env = EnvironmentMap(gt.env.height(), gt.env.width(), rad);
    for (auto& m : x.materials) {
      for (double& v : m.raw) v *= 0.97;
    }
    const ObjectiveValue a = objective(pb, x);
    auto rel = [](double an, double num) {
      const double s = std::max(std::abs(an), std::abs(num));
      return s == 0.0 ? 0.0 : std::abs(an - num) / s;
    };
    std::mt19937_64 rng(seed);

    for (int t = 0; t < 8; ++t) {
      const std::size_t i = rng() % rad.size();
      const int k = static_cast<int>(rng() % 3);
      auto value = [&](double d) {
        std::vector<Rgb> r2 = rad;
        r2[i][k] += d;
        SceneState y = x;
        y.env = EnvironmentMap(x.env.height(), x.env.width(), r2);
        return objective(pb, y).value;
      };
      const double num = (value(1e-3) - value(-1e-3)) / 2e-3;
      EXPECT_LT(rel(a.gradients.dEnv[i][k], num), 1e-4) << "env " << i << " " << k;
    }

    for (int t = 0; t < 8; ++t) {
      const std::size_t r = rng() % x.materials.size();
      const int j = static_cast<int>(rng() % kMaterialParams);
      const double h = 1e-5 * std::max(1.0, std::abs(x.materials[r].raw[j]));
      auto value = [&](double d) {
        SceneState y = x;
        y.materials[r].raw[j] += d;
        return objective(pb, y).value;
      };
      const double num = (value(h) - value(-h)) / (2.0 * h);
      EXPECT_LT(rel(a.gradients.dMaterial[r][j], num), 1e-4) << "material " << r << " " << j;
    }

    for (int t = 0; t < 8; ++t) {
      std::size_t p = rng() % x.normals.size();
      while (!x.normals.mask()[p]) p = (p + 1) % x.normals.size();
      const Vec3 n = x.normals.normals()[p];
      const Vec3 tangent = normalize(cross(n, std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}));
      auto value = [&](double d) {
        std::vector<Vec3> nn(x.normals.normals().begin(), x.normals.normals().end());
        nn[p] = normalize(n + tangent * d);
        SceneState y = x;
        y.normals = NormalMap(x.normals.width(), x.normals.height(), nn,
                              std::vector<std::uint8_t>(x.normals.mask().begin(), x.normals.mask().end()));
        return objective(pb, y).value;
      };
      const double num = (value(1e-5) - value(-1e-5)) / 2e-5;
      EXPECT_LT(rel(dot(a.gradients.dNormal[p], tangent), num), 1e-4) << "normal " << p;
    }
  }
}

TEST(Solve, GroundTruthInitIsUnchanged) {
  const RenderScene gt = small_sphere("glossy");
  const InverseProblem pb = problem_from(gt, state_of(gt), {false, false, true});
  const SolveResult r = solve(pb);
  EXPECT_EQ(r.initialObjective, 0.0);
  EXPECT_EQ(r.finalObjective, 0.0);
  EXPECT_EQ(r.state.materials[0].raw, gt.materials[0].raw);
  EXPECT_TRUE(r.trace.empty());
}

TEST(Solve, FullProblemDescendsMonotonically) {
  const RenderScene gt = small_sphere("two-tone-a");
  SceneState init = state_of(gt);
  init.normals = jitter_normals(gt.normalMap, 0.1, 7);
  init.env = gt.env.scaled(1.2);
  const InverseProblem pb = problem_from(gt, init, {});
  OptimizerConfig cfg;
  cfg.maxCycles = 3;
  cfg.innerItersPerGroup = 8;
  const SolveResult r = solve(pb, cfg);
  EXPECT_LT(r.finalObjective, r.initialObjective);
  double prev = r.initialObjective;
  for (double v : r.perCycleObjective) {
    EXPECT_LE(v, prev);
    prev = v;
  }
  prev = r.initialObjective;
  for (const TraceEntry& e : r.trace) {
    EXPECT_LE(e.objective, prev);
    prev = e.objective;
  }
  for (std::size_t p = 0; p < r.state.normals.size(); ++p) {
    if (r.state.normals.mask()[p]) EXPECT_NEAR(length(r.state.normals.normals()[p]), 1.0, 1e-9);
  }
  for (const Rgb& c : r.state.env.radiance()) {
    for (double v : c) EXPECT_GE(v, 0.0);
  }
  EXPECT_NEAR(objective(pb, r.state).value, r.finalObjective, 1e-9 * r.initialObjective);
}

TEST(Solve, FrozenGroupsAreBitIdentical) {
  const RenderScene gt = small_sphere("matte");
  SceneState init = state_of(gt);
  init.env = gt.env.scaled(0.5);
  init.normals = jitter_normals(gt.normalMap, 0.05, 2);
  const InverseProblem pb = problem_from(gt, init, {false, true, false});
  OptimizerConfig cfg;
  cfg.maxCycles = 2;
  cfg.innerItersPerGroup = 5;
  const SolveResult r = solve(pb, cfg);
  EXPECT_LT(r.finalObjective, r.initialObjective);
  EXPECT_TRUE(std::equal(r.state.normals.normals().begin(), r.state.normals.normals().end(),
                         init.normals.normals().begin()));
  EXPECT_EQ(r.state.materials[0].raw, init.materials[0].raw);
}

TEST(Solve, RejectsBadConfig) {
  const RenderScene gt = small_sphere("matte");
  OptimizerConfig cfg;
  cfg.backtrackFactor = 1.0;
  EXPECT_THROW(solve(problem_from(gt, state_of(gt), {}), cfg), Error);
  OptimizerConfig zero;
  zero.maxCycles = 0;
  EXPECT_THROW(solve(problem_from(gt, state_of(gt), {}), zero), Error);
}

TEST(Solve, RejectsMismatchedTarget) {
  const RenderScene gt = small_sphere("matte");
  InverseProblem pb = problem_from(gt, state_of(gt), {});
  pb.target = RadianceImage(5, 5);
  EXPECT_THROW(solve(pb), Error);
}

TEST(EditMaterial, OwnMaterialIsBitExact) {
  const RenderScene s = small_sphere("glossy");
  EXPECT_EQ(edit_material(s, s.materials[0]), render(s));
}

TEST(EditMaterial, ZeroMaterialIsBlack) {
  const RenderScene s = small_sphere("glossy");
  for (const Rgb& p : edit_material(s, DsbrdfMaterial::zero()).pixels) EXPECT_EQ(p, (Rgb{0, 0, 0}));
}

TEST(EditMaterial, SwappingMaterialsEqualsRelabeling) {
  testing::RandomSceneOptions o;
  o.width = 4;
  o.height = 4;
  o.regions = 2;
  const RenderScene s = testing::random_scene(21, o);
  const RadianceImage swapped = edit_material(s, std::vector<DsbrdfMaterial>{s.materials[1], s.materials[0]});
  std::vector<std::uint16_t> ids(s.segmentation->region_ids().begin(), s.segmentation->region_ids().end());
  for (auto& id : ids) {
    if (id != SegmentationMask::kBackground) id = static_cast<std::uint16_t>(1 - id);
  }
  RenderScene relabeled = s;
  relabeled.segmentation = SegmentationMask(4, 4, ids, 2);
  EXPECT_EQ(swapped, render(relabeled));
}

TEST(EditMaterial, CountMismatch) {
  testing::RandomSceneOptions o;
  o.regions = 2;
  const RenderScene s = testing::random_scene(22, o);
  try {
    edit_material(s, std::vector<DsbrdfMaterial>{s.materials[0]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRegionCountMismatch);
  }
}

TEST(Trace, FormatIsSpaceSeparated) {
  const TraceEntry e{2, ParamGroup::kLight, 5, 0.25, 1.5};
  EXPECT_EQ(format_trace_entry(e), "2 light 5 0.25 1.5");
}

}  // namespace
}  // namespace dsbrdf
