// dsbrdf command-line tool: render, edit, invert, gradcheck, metrics, fixtures.
// Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsbrdf/fixtures.hpp"
#include "dsbrdf/grad.hpp"
#include "dsbrdf/invert.hpp"
#include "dsbrdf/io.hpp"
#include "dsbrdf/metrics.hpp"
#include "dsbrdf/render.hpp"

namespace {

using namespace dsbrdf;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

constexpr double kLightTolerance = 1e-9;
constexpr double kSmoothTolerance = 1e-4;

struct SceneArgs {
  std::string normals;
  std::string env;
  std::vector<std::string> materials;
  std::string segmentation;
  std::string camera = "ortho";
};

void add_scene_options(CLI::App* cmd, SceneArgs& a, bool required) {
  cmd->add_option("--normals", a.normals, "16-bit RGBA normal map PNG")->required(required);
  cmd->add_option("--env", a.env, "environment map PFM")->required(required);
  cmd->add_option("--material", a.materials, "material JSON, one per region");
  cmd->add_option("--segmentation", a.segmentation, "8-bit region id PNG (255 = background)");
  cmd->add_option("--camera", a.camera, "pinhole:FOV_DEGREES or ortho")->capture_default_str();
}

Camera parse_camera(const std::string& spec, int w, int h) {
  if (spec == "ortho" || spec == "orthographic") return Camera::orthographic(w, h);
  const std::string prefix = "pinhole:";
  if (spec.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double fov = 0.0;
    try {
      fov = std::stod(spec.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used > 0 && used == spec.size() - prefix.size()) return Camera::pinhole(fov, w, h);
  }
  throw Error(ErrorCode::kInvalidArgument, "camera must be 'ortho' or 'pinhole:FOV', got '" + spec + "'");
}

std::vector<DsbrdfMaterial> read_materials(const std::vector<std::string>& paths) {
  std::vector<DsbrdfMaterial> out;
  for (const auto& p : paths) out.push_back(io::read_material(p).material);
  return out;
}

void check_material_count(std::size_t got, const std::optional<SegmentationMask>& seg) {
  const std::size_t want = seg ? static_cast<std::size_t>(seg->region_count()) : 1;
  if (got != want) {
    throw Error(ErrorCode::kRegionCountMismatch,
                "expected " + std::to_string(want) + " materials, got " + std::to_string(got));
  }
}

RenderScene load_scene(const SceneArgs& a, const std::vector<std::string>& materialPaths) {
  NormalMap normals = io::read_normal_png16(a.normals);
  EnvironmentMap env = io::read_env_pfm(a.env);
  std::optional<SegmentationMask> seg;
  if (!a.segmentation.empty()) seg = io::read_segmentation_png(a.segmentation);
  check_material_count(materialPaths.size(), seg);
  const Camera camera = parse_camera(a.camera, normals.width(), normals.height());
  RenderScene scene{std::move(normals), camera, std::move(env), read_materials(materialPaths), std::move(seg)};
  scene.validate();
  return scene;
}

void write_outputs(const RadianceImage& img, const RenderScene& scene, const std::string& out,
                   const std::string& preview) {
  io::write_pfm(out, img);
  if (!preview.empty()) io::write_ldr_png(preview, tone_map(img, std::nullopt, scene.normalMap.mask()));
}

GradientGroups parse_groups(const std::string& list) {
  GradientGroups g{false, false, false};
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "normal") {
      g.normal = true;
    } else if (tok == "light") {
      g.light = true;
    } else if (tok == "material") {
      g.material = true;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown group '" + tok + "' (expected normal, light, material)");
    }
  }
  if (!g.normal && !g.light && !g.material) throw Error(ErrorCode::kInvalidArgument, "no group selected");
  return g;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---- subcommands

struct RenderArgs {
  SceneArgs scene;
  std::string out;
  std::string preview;
};

int run_render(const RenderArgs& a) {
  const RenderScene scene = load_scene(a.scene, a.scene.materials);
  write_outputs(render(scene), scene, a.out, a.preview);
  return kExitOk;
}

struct EditArgs {
  SceneArgs scene;
  std::vector<std::string> targets;
  std::string out;
  std::string preview;
};

int run_edit(const EditArgs& a) {
  // The source materials are optional: only the targets are rendered.
  std::vector<std::string> source = a.scene.materials.empty() ? a.targets : a.scene.materials;
  const RenderScene scene = load_scene(a.scene, source);
  const RadianceImage img = edit_material(scene, read_materials(a.targets));
  write_outputs(img, scene, a.out, a.preview);
  return kExitOk;
}

struct InvertArgs {
  std::string target;
  std::string initNormals;
  std::string initEnv;
  std::vector<std::string> initMaterials;
  std::string segmentation;
  std::string camera = "ortho";
  std::string free = "normal,light,material";
  double a = 1.0;
  double b = 10.0;
  int maxCycles = 50;
  int innerIters = 20;
  std::string trace;
  std::string outPrefix;
};

int run_invert(const InvertArgs& a) {
  const GradientGroups groups = parse_groups(a.free);
  NormalMap normals = io::read_normal_png16(a.initNormals);
  EnvironmentMap env = io::read_env_pfm(a.initEnv);
  std::optional<SegmentationMask> seg;
  if (!a.segmentation.empty()) seg = io::read_segmentation_png(a.segmentation);
  check_material_count(a.initMaterials.size(), seg);
  std::vector<io::MaterialFile> files;
  std::vector<DsbrdfMaterial> materials;
  for (const auto& p : a.initMaterials) {
    files.push_back(io::read_material(p));
    materials.push_back(files.back().material);
  }
  const Camera camera = parse_camera(a.camera, normals.width(), normals.height());
  InverseProblem problem{io::read_radiance_pfm(a.target),
                         SceneState{std::move(normals), std::move(materials), std::move(env)},
                         a.a,
                         a.b,
                         camera,
                         std::move(seg),
                         groups};
  OptimizerConfig config;
  config.maxCycles = a.maxCycles;
  config.innerItersPerGroup = a.innerIters;
  const SolveResult result = solve(problem, config);

  if (!a.trace.empty()) {
    std::ofstream t(a.trace);
    if (!t) throw Error(ErrorCode::kIo, "cannot open '" + a.trace + "' for writing");
    for (const auto& e : result.trace) t << format_trace_entry(e) << '\n';
  }
  const std::string prefix = a.outPrefix;
  io::write_normal_png16(prefix + "normals.png", result.state.normals);
  io::write_pfm(prefix + "env.pfm", result.state.env);
  for (std::size_t r = 0; r < result.state.materials.size(); ++r) {
    const std::string name = result.state.materials.size() == 1 ? "material.json"
                                                                 : "material" + std::to_string(r) + ".json";
    io::write_material(prefix + name, io::MaterialFile{result.state.materials[r], files[r].name});
  }
  io::write_pfm(prefix + "render.pfm", render(problem.scene(result.state)));
  std::cout << "cycles=" << result.cycles << " initial=" << fmt(result.initialObjective)
            << " final=" << fmt(result.finalObjective) << '\n';
  return kExitOk;
}

struct GradcheckArgs {
  SceneArgs scene;
  std::uint64_t seed = 1;
  int trials = 32;
  std::optional<double> step;
  std::string groups = "light,normal,material";
};

int run_gradcheck(const GradcheckArgs& a) {
  const bool custom = !a.scene.normals.empty() || !a.scene.env.empty();
  if (custom && (a.scene.normals.empty() || a.scene.env.empty())) {
    throw Error(ErrorCode::kInvalidArgument, "--normals and --env must be given together");
  }
  const RenderScene scene = custom ? load_scene(a.scene, a.scene.materials) : fixtures::gradcheck_scene();
  const GradientGroups g = parse_groups(a.groups);
  FdOptions options;
  options.seed = a.seed;
  options.trials = a.trials;
  options.step = a.step;
  bool ok = true;
  for (ParamGroup group : {ParamGroup::kLight, ParamGroup::kNormal, ParamGroup::kMaterial}) {
    if ((group == ParamGroup::kLight && !g.light) || (group == ParamGroup::kNormal && !g.normal) ||
        (group == ParamGroup::kMaterial && !g.material)) {
      continue;
    }
    const FdReport r = fd_check(scene, group, options);
    const double tol = group == ParamGroup::kLight ? kLightTolerance : kSmoothTolerance;
    const bool pass = r.maxRelError < tol;
    ok = ok && pass;
    std::cout << param_group_name(group) << " max_rel_err=" << fmt(r.maxRelError) << " tol=" << fmt(tol)
              << " worst=" << (r.worstCoordinate.empty() ? "-" : r.worstCoordinate)
              << " analytic=" << fmt(r.worstAnalytic) << " numeric=" << fmt(r.worstNumeric)
              << " checked=" << r.checked << " skipped=" << r.skipped << (pass ? " PASS" : " FAIL") << '\n';
  }
  return ok ? kExitOk : kExitNumerical;
}

struct MetricsArgs {
  std::string a;
  std::string b;
  std::string mask;
  std::optional<double> exposure;
};

int run_metrics(const MetricsArgs& m) {
  const RadianceImage a = io::read_radiance_pfm(m.a);
  const RadianceImage b = io::read_radiance_pfm(m.b);
  if (a.width != b.width || a.height != b.height) throw Error(ErrorCode::kShapeMismatch, "images differ in size");
  std::vector<std::uint8_t> mask;
  if (!m.mask.empty()) {
    const NormalMap n = io::read_normal_png16(m.mask);
    if (n.width() != a.width || n.height() != a.height) {
      throw Error(ErrorCode::kShapeMismatch, "mask size does not match the images");
    }
    mask.assign(n.mask().begin(), n.mask().end());
  }
  // One exposure for both images, taken from the first (the reference).
  const double exposure = m.exposure ? *m.exposure : auto_exposure(a, mask);
  const LdrImage ta = tone_map(a, exposure);
  const LdrImage tb = tone_map(b, exposure);
  std::cout << "l2=" << fmt(l2_metric(ta, tb, mask)) << " ssim=" << fmt(ssim(ta, tb)) << '\n';
  return kExitOk;
}

int run_fixtures(const std::string& out) {
  fixtures::write_fixture_set(out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable DSBRDF renderer and inverse-rendering tool"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  RenderArgs renderArgs;
  auto* render = app.add_subcommand("render", "render a scene to PFM");
  add_scene_options(render, renderArgs.scene, true);
  render->add_option("--out", renderArgs.out, "output PFM")->required();
  render->add_option("--preview", renderArgs.preview, "tone-mapped PNG preview");

  EditArgs editArgs;
  auto* edit = app.add_subcommand("edit", "re-render a scene with substituted materials");
  add_scene_options(edit, editArgs.scene, true);
  edit->add_option("--target-material", editArgs.targets, "replacement material JSON, one per region")->required();
  edit->add_option("--out", editArgs.out, "output PFM")->required();
  edit->add_option("--preview", editArgs.preview, "tone-mapped PNG preview");

  InvertArgs invertArgs;
  auto* invert = app.add_subcommand("invert", "recover normals, lighting and material from an image");
  invert->add_option("--target", invertArgs.target, "observed radiance PFM")->required();
  invert->add_option("--init-normals", invertArgs.initNormals, "initial normal map PNG")->required();
  invert->add_option("--init-env", invertArgs.initEnv, "initial environment PFM")->required();
  invert->add_option("--init-material", invertArgs.initMaterials, "initial material JSON, one per region");
  invert->add_option("--segmentation", invertArgs.segmentation, "region id PNG");
  invert->add_option("--camera", invertArgs.camera, "pinhole:FOV_DEGREES or ortho")->capture_default_str();
  invert->add_option("--free", invertArgs.free, "comma-separated groups to optimize")->capture_default_str();
  invert->add_option("--a", invertArgs.a, "normal prior weight")->capture_default_str();
  invert->add_option("--b", invertArgs.b, "lighting prior weight")->capture_default_str();
  invert->add_option("--max-cycles", invertArgs.maxCycles, "alternation cycles")->capture_default_str();
  invert->add_option("--inner-iters", invertArgs.innerIters, "L-BFGS iterations per group")->capture_default_str();
  invert->add_option("--trace", invertArgs.trace, "write the optimization trace here");
  invert->add_option("--out-prefix", invertArgs.outPrefix, "prefix for recovered files")->required();

  GradcheckArgs gradArgs;
  auto* grad = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  add_scene_options(grad, gradArgs.scene, false);
  grad->add_option("--seed", gradArgs.seed, "probe seed")->capture_default_str();
  grad->add_option("--trials", gradArgs.trials, "coordinates per group")->capture_default_str()->check(
      CLI::PositiveNumber);
  grad->add_option("--step", gradArgs.step, "finite-difference step (default: per group)")->check(
      CLI::PositiveNumber);
  grad->add_option("--groups", gradArgs.groups, "comma-separated groups")->capture_default_str();

  MetricsArgs metricsArgs;
  auto* metrics = app.add_subcommand("metrics", "tone-mapped L2 and SSIM between two PFM images");
  metrics->add_option("a", metricsArgs.a, "reference PFM")->required();
  metrics->add_option("b", metricsArgs.b, "compared PFM")->required();
  metrics->add_option("--mask", metricsArgs.mask, "normal map PNG whose foreground restricts L2");
  metrics->add_option("--exposure", metricsArgs.exposure, "fixed exposure (default: from the reference)");

  std::string fixturesOut;
  auto* fixturesCmd = app.add_subcommand("fixtures", "write the procedural fixture set");
  fixturesCmd->add_option("--out", fixturesOut, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (render->parsed()) return run_render(renderArgs);
    if (edit->parsed()) return run_edit(editArgs);
    if (invert->parsed()) return run_invert(invertArgs);
    if (grad->parsed()) return run_gradcheck(gradArgs);
    if (metrics->parsed()) return run_metrics(metricsArgs);
    if (fixturesCmd->parsed()) return run_fixtures(fixturesOut);
  } catch (const Error& e) {
    std::cerr << "dsbrdf: " << e.what() << '\n';
    return is_numerical(e.code()) ? kExitNumerical : kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "dsbrdf: io: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "dsbrdf: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
