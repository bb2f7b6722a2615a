// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dsbrdf/fixtures.hpp"
#include "dsbrdf/grad.hpp"
#include "dsbrdf/invert.hpp"
#include "dsbrdf/io.hpp"
#include "dsbrdf/lbfgs.hpp"
#include "dsbrdf/metrics.hpp"
#include "dsbrdf/spline.hpp"
#include "oracles.hpp"
#include "random_scene.hpp"

using namespace dsbrdf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_rel_diff(const RadianceImage& a, const RadianceImage& b) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.pixels.size(); ++p) {
    for (int k = 0; k < 3; ++k) {
      const double d = std::abs(a.pixels[p][k] - b.pixels[p][k]);
      if (d > 0.0) worst = std::max(worst, d / std::max(std::abs(a.pixels[p][k]), std::abs(b.pixels[p][k])));
    }
  }
  return worst;
}

Outcome gradient_correctness() {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto t0 = Clock::now();
  double worstLight = 0.0, worstNormal = 0.0, worstMaterial = 0.0;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RenderScene s = testing::random_scene(1000 + seed);
    FdOptions opt;
    opt.seed = seed;
    opt.trials = 30;
    const FdReport l = fd_check(s, ParamGroup::kLight, opt);
    const FdReport n = fd_check(s, ParamGroup::kNormal, opt);
    const FdReport m = fd_check(s, ParamGroup::kMaterial, opt);
    worstLight = std::max(worstLight, l.maxRelError);
    worstNormal = std::max(worstNormal, n.maxRelError);
    worstMaterial = std::max(worstMaterial, m.maxRelError);
    checked += l.checked + n.checked + m.checked;
  }
  const double elapsed = seconds_since(t0);
  omp_set_num_threads(saved);
  const bool pass = worstLight < 1e-9 && worstNormal < 1e-4 && worstMaterial < 1e-4 && elapsed < 60.0;
  return {pass, fmt("light %.2e normal %.2e material %.2e over %d coordinates, %.1f s", worstLight, worstNormal,
                    worstMaterial, checked, elapsed)};
}

Outcome forward_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    testing::RandomSceneOptions o;
    o.width = 4 + static_cast<int>(seed % 5);
    o.height = 8 - static_cast<int>(seed % 3);
    o.envHeight = 4;
    o.envWidth = 8;
    o.regions = 1 + static_cast<int>(seed % 3);
    const RenderScene s = testing::random_scene(2000 + seed, o);
    worst = std::max(worst, max_rel_diff(render(s), oracle::render(s)));
  }
  return {worst < 1e-10, fmt("max relative difference %.2e on 20 scenes", worst)};
}

Outcome rendering_algebra() {
  double linearity = 0.0;
  bool zeroBlack = true, segmentation = true, scaling = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RenderScene s = testing::random_scene(3000 + seed);
    const EnvironmentMap L1 = s.env;
    const EnvironmentMap L2 = testing::random_scene(3100 + seed).env;
    const double a = 0.3 + 0.1 * seed, b = 1.7 - 0.05 * seed;
    std::vector<Rgb> mix(L1.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
      for (int k = 0; k < 3; ++k) mix[i][k] = a * L1.radiance()[i][k] + b * L2.radiance()[i][k];
    }
    const RadianceImage r1 = render(s);
    s.env = L2;
    const RadianceImage r2 = render(s);
    s.env = EnvironmentMap(L1.height(), L1.width(), mix);
    const RadianceImage rm = render(s);
    for (std::size_t p = 0; p < rm.pixels.size(); ++p) {
      for (int k = 0; k < 3; ++k) {
        const double e = a * r1.pixels[p][k] + b * r2.pixels[p][k];
        if (e != 0.0) linearity = std::max(linearity, std::abs(rm.pixels[p][k] - e) / std::abs(e));
      }
    }

    s.env = L1;
    RenderScene z = s;
    z.materials = {DsbrdfMaterial::zero()};
    for (const Rgb& c : render(z).pixels) zeroBlack = zeroBlack && c == Rgb{0, 0, 0};

    RenderScene seg = s;
    std::vector<std::uint16_t> ids(s.normalMap.size(), SegmentationMask::kBackground);
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (s.normalMap.mask()[p]) ids[p] = 0;
    }
    seg.segmentation = SegmentationMask(s.normalMap.width(), s.normalMap.height(), ids, 1);
    segmentation = segmentation && render(seg) == r1;

    for (double alpha : {0.25, 2.0, 8.0}) {
      RenderScene sc = s;
      sc.env = s.env.scaled(alpha);
      const RadianceImage ra = render(sc);
      for (std::size_t p = 0; p < ra.pixels.size(); ++p) {
        for (int k = 0; k < 3; ++k) scaling = scaling && ra.pixels[p][k] == alpha * r1.pixels[p][k];
      }
    }
  }
  const bool pass = linearity < 1e-9 && zeroBlack && segmentation && scaling;
  return {pass, fmt("linearity %.2e, zero material black %s, single-region segmentation exact %s, scaling exact %s",
                    linearity, zeroBlack ? "yes" : "no", segmentation ? "yes" : "no", scaling ? "yes" : "no")};
}

struct SphereScenario {
  NormalMap normals = fixtures::sphere_normal_map(32);
  EnvironmentMap env = fixtures::studio_env(16, 32);
  Camera camera = Camera::orthographic(32, 32);
};

Outcome full_descent() {
  const SphereScenario sc;
  const DsbrdfMaterial truth = fixtures::preset("glossy");
  const RadianceImage target = render(RenderScene{sc.normals, sc.camera, sc.env, {truth}, std::nullopt});
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<Vec3> nn(sc.normals.normals().begin(), sc.normals.normals().end());
  for (std::size_t p = 0; p < nn.size(); ++p) {
    if (sc.normals.mask()[p]) nn[p] = normalize(nn[p] + Vec3{g(rng), g(rng), g(rng)});
  }
  const NormalMap perturbed(32, 32, nn, std::vector<std::uint8_t>(sc.normals.mask().begin(), sc.normals.mask().end()));
  const InverseProblem pb{target, SceneState{perturbed, {truth}, sc.env.scaled(1.2)}, 1.0, 10.0, sc.camera,
                          std::nullopt, {}};
  const auto t0 = Clock::now();
  const SolveResult r = solve(pb);
  const double elapsed = seconds_since(t0);
  bool monotone = true;
  double prev = r.initialObjective;
  for (const TraceEntry& e : r.trace) {
    monotone = monotone && e.objective <= prev;
    prev = e.objective;
  }
  prev = r.initialObjective;
  for (double v : r.perCycleObjective) {
    monotone = monotone && v <= prev;
    prev = v;
  }
  const double ratio = r.finalObjective / r.initialObjective;
  const bool pass = monotone && ratio <= 0.1 && elapsed < 120.0;
  return {pass, fmt("objective %.4g -> %.4g (ratio %.4f), monotone %s, %d cycles, %.1f s", r.initialObjective,
                    r.finalObjective, ratio, monotone ? "yes" : "no", r.cycles, elapsed)};
}

Outcome material_recovery() {
  const SphereScenario sc;
  const RadianceImage target =
      render(RenderScene{sc.normals, sc.camera, sc.env, {fixtures::preset("glossy")}, std::nullopt});
  const InverseProblem pb{target, SceneState{sc.normals, {DsbrdfMaterial::zero()}, sc.env}, 1.0, 10.0, sc.camera,
                          std::nullopt, {false, false, true}};
  const auto t0 = Clock::now();
  const SolveResult r = solve(pb);
  const double elapsed = seconds_since(t0);
  const RadianceImage recovered = render(pb.scene(r.state));
  const double exposure = auto_exposure(target, sc.normals.mask());
  const LdrImage a = tone_map(target, exposure), b = tone_map(recovered, exposure);
  const double l2 = l2_metric(a, b, sc.normals.mask());
  const double s = ssim(a, b);
  return {l2 <= 20.0 && s >= 0.98, fmt("tone-mapped L2 %.3f, SSIM %.5f, %.1f s", l2, s, elapsed)};
}

Outcome spline_layer() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  spline::QuadBSpline known;
  for (double& c : known.controlPoints) c = u(rng);
  std::vector<double> thetas(18), values(18);
  for (int i = 0; i < 18; ++i) {
    thetas[i] = spline::kThetaMax * i / 17.0;
    values[i] = spline::eval(known, thetas[i]);
  }
  const spline::QuadBSpline got = spline::fit(thetas, values);
  double fitErr = 0.0;
  for (int j = 0; j < spline::kControlPoints; ++j) {
    fitErr = std::max(fitErr, std::abs(got.controlPoints[j] - known.controlPoints[j]));
  }
  double unity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const spline::Basis b = spline::basis(spline::kThetaMax * i / 999.0);
    double sum = 0.0;
    for (double w : b) sum += w;
    unity = std::max(unity, std::abs(sum - 1.0));
  }
  return {fitErr < 1e-8 && unity < 1e-12, fmt("control-point error %.2e, partition of unity error %.2e", fitErr, unity)};
}

Outcome lbfgs_behavior() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> c(10), x0(10);
  for (int i = 0; i < 10; ++i) c[i] = u(rng), x0[i] = u(rng);
  LbfgsOptions opt;
  opt.relTol = 0.0;
  const LbfgsResult a = lbfgs_minimize(
      [&](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (int i = 0; i < 10; ++i) {
          f += (x[i] - c[i]) * (x[i] - c[i]);
          g[i] = 2.0 * (x[i] - c[i]);
        }
        return f;
      },
      x0, opt);
  double err = 0.0;
  for (int i = 0; i < 10; ++i) err = std::max(err, std::abs(a.x[i] - c[i]));

  opt.maxIterations = 60;
  const LbfgsResult b = lbfgs_minimize(
      [](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          f += (i + 1.0) * x[i] * x[i];
          g[i] = 2.0 * (i + 1.0) * x[i];
        }
        return f;
      },
      std::vector<double>(20, 1.0), opt);
  const bool pass = err < 1e-8 && a.iterations <= 5 && b.value < 1e-10 && b.iterations <= 60;
  return {pass, fmt("sphere error %.2e in %d iterations; diagonal f %.2e in %d iterations", err, a.iterations, b.value,
                    b.iterations)};
}

Outcome metrics_checks() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  auto random_ldr = [&](int w, int h) {
    LdrImage img{w, h, std::vector<Rgb>(w * h)};
    for (Rgb& p : img.pixels) {
      for (double& ch : p) ch = u(rng);
    }
    return img;
  };
  bool self = true;
  double oracleErr = 0.0, l2Self = 0.0;
  for (int t = 0; t < 20; ++t) {
    const LdrImage a = random_ldr(16, 16), b = random_ldr(16, 16);
    self = self && ssim(a, a) == 1.0;
    oracleErr = std::max(oracleErr, std::abs(ssim(a, b) - oracle::ssim(a, b)));
    l2Self = std::max(l2Self, l2_metric(a, a));
  }
  return {self && oracleErr < 1e-9 && l2Self == 0.0,
          fmt("ssim(a,a)==1 %s, oracle difference %.2e, l2(a,a) %g", self ? "yes" : "no", oracleErr, l2Self)};
}

Outcome round_trips() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> uf(0.0f, 100.0f);
  std::vector<Rgb> px(64);
  for (Rgb& p : px) {
    for (double& c : p) c = uf(rng);
  }
  const bool pfm = io::parse_pfm(io::encode_pfm(8, 8, px)).pixels == px;

  const NormalMap n = fixtures::sphere_normal_map(40);
  double normalErr = 0.0;
  for (std::size_t p = 0; p < n.size(); ++p) {
    if (!n.mask()[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const double v = n.normals()[p][c];
      normalErr = std::max(normalErr, std::abs(io::dequantize_normal_component(io::quantize_normal_component(v)) - v));
    }
  }
  const NormalMap back = io::decode_normal_png16(io::encode_normal_png16(n));
  bool maskSame = std::equal(back.mask().begin(), back.mask().end(), n.mask().begin());

  bool material = true;
  for (int t = 0; t < 10; ++t) {
    io::MaterialFile f{testing::random_material(rng, {}), "m" + std::to_string(t)};
    material = material && io::parse_material(io::format_material(f)).material.raw == f.material.raw;
  }
  const bool pass = pfm && normalErr < 2.0 / 65535.0 && maskSame && material;
  return {pass, fmt("PFM exact %s, normal codec error %.3f/65535, material exact %s", pfm ? "yes" : "no",
                    normalErr * 65535.0, material ? "yes" : "no")};
}

Outcome performance() {
  const RenderScene s{fixtures::sphere_normal_map(128), Camera::orthographic(128, 128), fixtures::studio_env(64, 128),
                      {fixtures::preset("glossy")}, std::nullopt};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  auto t0 = Clock::now();
  const RadianceImage one = render(s);
  const double serial = seconds_since(t0);
  omp_set_num_threads(8);
  t0 = Clock::now();
  const RadianceImage eight = render(s);
  const double parallel = seconds_since(t0);
  omp_set_num_threads(saved);
  const bool same = one == eight;
  const bool pass = serial < 10.0 && parallel < 3.0 && same;
  return {pass, fmt("1 worker %.2f s, 8 workers %.2f s (%d cores available), bit-identical %s", serial, parallel,
                    omp_get_num_procs(), same ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"forward oracle equivalence", forward_oracle},
      {"rendering-layer algebra", rendering_algebra},
      {"alternating descent", full_descent},
      {"material recovery", material_recovery},
      {"spline layer", spline_layer},
      {"L-BFGS behavior", lbfgs_behavior},
      {"metrics", metrics_checks},
      {"round trips", round_trips},
      {"performance", performance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %zu (%s): %s - %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
