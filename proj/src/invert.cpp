#include "dsbrdf/invert.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kernels/shading_kernel.hpp"

namespace dsbrdf {

namespace {

bool finite_gradients(const SceneGradients& g) {
  for (const Vec3& v : g.dNormal) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) return false;
  }
  for (const Rgb& v : g.dEnv) {
    for (double c : v) {
      if (!std::isfinite(c)) return false;
    }
  }
  for (const MaterialParams& m : g.dMaterial) {
    for (double c : m) {
      if (!std::isfinite(c)) return false;
    }
  }
  return true;
}

}  // namespace

double loss_normal(const NormalMap& pred, const NormalMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(ErrorCode::kShapeMismatch, "normal maps differ in size");
  }
  if (!std::equal(pred.mask().begin(), pred.mask().end(), gt.mask().begin())) {
    throw Error(ErrorCode::kShapeMismatch, "normal maps differ in foreground mask");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (!pred.mask()[p]) continue;
    const Vec3 d = pred.normals()[p] - gt.normals()[p];
    sum += dot(d, d);
  }
  return sum;
}

double loss_material(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kShapeMismatch, "material vectors differ in length: " + std::to_string(pred.size()) +
                                               " vs " + std::to_string(gt.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - gt[i]) * (pred[i] - gt[i]);
  return sum;
}

double loss_combined(const LossWeights& w, double lNormal, double lMaterial, double lImage) {
  return w.wN * lNormal + w.wM * lMaterial + w.wImage * lImage;
}

void InverseProblem::validate() const {
  if (!(a >= 0.0) || !(b >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "regularizer weights must be >= 0");
  if (target.width != init.normals.width() || target.height != init.normals.height() ||
      target.pixels.size() != init.normals.size()) {
    throw Error(ErrorCode::kShapeMismatch, "target image does not match the normal map");
  }
  scene(init).validate();
}

RenderScene InverseProblem::scene(const SceneState& state) const {
  return RenderScene{state.normals, camera, state.env, state.materials, segmentation};
}

ObjectiveValue objective(const InverseProblem& problem, const SceneState& state) {
  return objective(problem, state, problem.freeGroups);
}

ObjectiveValue objective(const InverseProblem& problem, const SceneState& state, GradientGroups groups) {
  const RenderScene scene = problem.scene(state);
  detail::SceneViewStorage storage;
  const detail::SceneView view = detail::make_view(scene, storage);
  if (view.pixel_count() != problem.target.pixels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "target image does not match the render");
  }
  // Background target pixels must not leak into the residual.
  const auto mask = state.normals.mask();
  std::vector<Rgb> target(problem.target.pixels);
  for (std::size_t p = 0; p < target.size(); ++p) {
    if (!mask[p]) target[p] = Rgb{};
  }
  RadianceImage img(view.width, view.height);
  ObjectiveValue out;
  if (detail::residual_kernel(view, target, groups, out.gradients, img.pixels) >= 0) {
    render(scene);  // reports the offending pixel and light
    throw Error(ErrorCode::kOverflow, "BRDF overflow");
  }

  double value = 0.0;
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    if (!mask[p]) continue;
    for (int k = 0; k < kChannels; ++k) {
      const double r = img.pixels[p][k] - target[p][k];
      value += r * r;
    }
  }
  if (!finite_gradients(out.gradients)) {
    RadianceImage upstream(img.width, img.height);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) {
      for (int k = 0; k < kChannels; ++k) upstream.pixels[p][k] = 2.0 * (img.pixels[p][k] - target[p][k]);
    }
    backward(scene, upstream, groups);  // throws with the location
    throw Error(ErrorCode::kNonfiniteGradient, "non-finite objective gradient");
  }

  const auto n = state.normals.normals();
  const auto n0 = problem.init.normals.normals();
  for (std::size_t p = 0; p < n.size(); ++p) {
    if (!mask[p]) continue;
    const Vec3 d = n[p] - n0[p];
    value += problem.a * dot(d, d);
  }
  const auto L = state.env.radiance();
  const auto L0 = problem.init.env.radiance();
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (int k = 0; k < kChannels; ++k) value += problem.b * (L[i][k] - L0[i][k]) * (L[i][k] - L0[i][k]);
  }
  out.value = value;
  if (groups.normal) {
    for (std::size_t p = 0; p < n.size(); ++p) {
      if (mask[p]) out.gradients.dNormal[p] += (2.0 * problem.a) * (n[p] - n0[p]);
    }
  }
  if (groups.light) {
    for (std::size_t i = 0; i < L.size(); ++i) {
      for (int k = 0; k < kChannels; ++k) out.gradients.dEnv[i][k] += 2.0 * problem.b * (L[i][k] - L0[i][k]);
    }
  }
  return out;
}

void OptimizerConfig::validate() const {
  if (memoryPairs < 1 || innerItersPerGroup < 1 || maxCycles < 1 || !(relTol > 0.0) || !(armijoC > 0.0) ||
      !(backtrackFactor > 0.0 && backtrackFactor < 1.0) || maxBacktracks < 1 || cycleOrder.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid optimizer configuration");
  }
}

std::string format_trace_entry(const TraceEntry& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d %s %d %.17g %.17g", e.cycle, param_group_name(e.group), e.iter, e.objective,
                e.gnorm);
  return buf;
}

namespace {

bool is_free(const GradientGroups& g, ParamGroup group) {
  switch (group) {
    case ParamGroup::kNormal: return g.normal;
    case ParamGroup::kLight: return g.light;
    case ParamGroup::kMaterial: return g.material;
  }
  return false;
}

GradientGroups only(ParamGroup group) {
  return {group == ParamGroup::kNormal, group == ParamGroup::kLight, group == ParamGroup::kMaterial};
}

// Packs one property group of the state into a flat vector and back, along
// with the feasibility projections for that group.
class GroupCodec {
 public:
  GroupCodec(ParamGroup group, const SceneState& state) : group_(group) {
    const auto mask = state.normals.mask();
    for (std::size_t p = 0; p < mask.size(); ++p) {
      if (mask[p]) pixels_.push_back(p);
    }
    for (const auto& m : state.materials) jacobians_.push_back(denormalize_jacobian(m.lo, m.hi));
  }

  std::vector<double> pack(const SceneState& s) const {
    std::vector<double> x;
    switch (group_) {
      case ParamGroup::kNormal:
        for (std::size_t p : pixels_) {
          const Vec3& n = s.normals.normals()[p];
          x.insert(x.end(), {n.x, n.y, n.z});
        }
        break;
      case ParamGroup::kLight:
        for (const Rgb& c : s.env.radiance()) x.insert(x.end(), c.begin(), c.end());
        break;
      case ParamGroup::kMaterial:
        for (const auto& m : s.materials) {
          const MaterialParams y = normalize_params(m);
          x.insert(x.end(), y.begin(), y.end());
        }
        break;
    }
    return x;
  }

  SceneState unpack(std::span<const double> x, const SceneState& base) const {
    switch (group_) {
      case ParamGroup::kNormal: {
        std::vector<Vec3> normals(base.normals.normals().begin(), base.normals.normals().end());
        for (std::size_t j = 0; j < pixels_.size(); ++j) normals[pixels_[j]] = {x[3 * j], x[3 * j + 1], x[3 * j + 2]};
        NormalMap nm(base.normals.width(), base.normals.height(), std::move(normals),
                     std::vector<std::uint8_t>(base.normals.mask().begin(), base.normals.mask().end()));
        return SceneState{std::move(nm), base.materials, base.env};
      }
      case ParamGroup::kLight: {
        std::vector<Rgb> rad(base.env.size());
        for (std::size_t i = 0; i < rad.size(); ++i) rad[i] = {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
        return SceneState{base.normals, base.materials, EnvironmentMap(base.env.height(), base.env.width(), rad)};
      }
      case ParamGroup::kMaterial: {
        std::vector<DsbrdfMaterial> mats;
        for (std::size_t r = 0; r < base.materials.size(); ++r) {
          mats.push_back(denormalize_params(x.subspan(r * kMaterialParams).first<kMaterialParams>(),
                                            base.materials[r].lo, base.materials[r].hi));
        }
        return SceneState{base.normals, std::move(mats), base.env};
      }
    }
    return base;
  }

  void gradient(const SceneGradients& grads, std::span<double> g) const {
    switch (group_) {
      case ParamGroup::kNormal:
        for (std::size_t j = 0; j < pixels_.size(); ++j) {
          const Vec3& d = grads.dNormal[pixels_[j]];
          g[3 * j] = d.x;
          g[3 * j + 1] = d.y;
          g[3 * j + 2] = d.z;
        }
        break;
      case ParamGroup::kLight:
        for (std::size_t i = 0; i < grads.dEnv.size(); ++i) {
          for (int k = 0; k < kChannels; ++k) g[3 * i + k] = grads.dEnv[i][k];
        }
        break;
      case ParamGroup::kMaterial:
        for (std::size_t r = 0; r < grads.dMaterial.size(); ++r) {
          for (int j = 0; j < kMaterialParams; ++j) {
            g[r * kMaterialParams + j] = grads.dMaterial[r][j] * jacobians_[r][j];
          }
        }
        break;
    }
  }

  void project(std::span<double> x) const {
    switch (group_) {
      case ParamGroup::kNormal:
        for (std::size_t j = 0; j + 2 < x.size(); j += 3) {
          const Vec3 n = normalize({x[j], x[j + 1], x[j + 2]});
          x[j] = n.x;
          x[j + 1] = n.y;
          x[j + 2] = n.z;
        }
        break;
      case ParamGroup::kLight:
        for (double& v : x) v = std::max(v, 0.0);
        break;
      case ParamGroup::kMaterial:
        for (double& v : x) v = std::clamp(v, -kNormBound, kNormBound);
        break;
    }
  }

  void project_gradient(std::span<const double> x, std::span<double> g) const {
    switch (group_) {
      case ParamGroup::kNormal:
        for (std::size_t j = 0; j + 2 < x.size(); j += 3) {
          const double gn = g[j] * x[j] + g[j + 1] * x[j + 1] + g[j + 2] * x[j + 2];
          for (int c = 0; c < 3; ++c) g[j + c] -= gn * x[j + c];
        }
        break;
      case ParamGroup::kLight:
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i] <= 0.0 && g[i] > 0.0) g[i] = 0.0;
        }
        break;
      case ParamGroup::kMaterial:
        for (std::size_t i = 0; i < x.size(); ++i) {
          if ((x[i] <= -kNormBound && g[i] > 0.0) || (x[i] >= kNormBound && g[i] < 0.0)) g[i] = 0.0;
        }
        break;
    }
  }

 private:
  ParamGroup group_;
  std::vector<std::size_t> pixels_;
  std::vector<MaterialParams> jacobians_;
};

}  // namespace

SolveResult solve(const InverseProblem& problem, const OptimizerConfig& config) {
  config.validate();
  problem.validate();

  SceneState state = problem.init;
  if (problem.freeGroups.material) {
    for (auto& m : state.materials) {
      for (int i = 0; i < kMaterialParams; ++i) m.raw[i] = std::clamp(m.raw[i], m.lo[i], m.hi[i]);
    }
  }

  double current = objective(problem, state, {false, false, false}).value;
  const double initial = current;
  std::vector<double> perCycle;
  std::vector<TraceEntry> trace;
  int cycles = 0;

  LbfgsOptions lopt;
  lopt.memory = config.memoryPairs;
  lopt.maxIterations = config.innerItersPerGroup;
  lopt.relTol = config.relTol;
  lopt.armijoC = config.armijoC;
  lopt.backtrackFactor = config.backtrackFactor;
  lopt.maxBacktracks = config.maxBacktracks;

  for (int cycle = 1; cycle <= config.maxCycles && current > 0.0; ++cycle) {
    const double cycleStart = current;
    for (ParamGroup group : config.cycleOrder) {
      if (!is_free(problem.freeGroups, group)) continue;
      const GroupCodec codec(group, state);
      const SceneState base = state;
      const ValueAndGradient f = [&](std::span<const double> x, std::span<double> g) {
        const ObjectiveValue ov = objective(problem, codec.unpack(x, base), only(group));
        codec.gradient(ov.gradients, g);
        return ov.value;
      };
      LbfgsHooks hooks;
      hooks.project = [&](std::span<double> x) { codec.project(x); };
      hooks.projectGradient = [&](std::span<const double> x, std::span<double> g) { codec.project_gradient(x, g); };
      hooks.onStep = [&](int iter, double value, double gnorm) {
        trace.push_back({cycle, group, iter, value, gnorm});
      };
      try {
        const LbfgsResult r = lbfgs_minimize(f, codec.pack(state), lopt, hooks);
        if (r.iterations > 0 && r.value < current) {
          state = codec.unpack(r.x, base);
          current = r.value;
        }
      } catch (const Error& e) {
        // No acceptable step for this group right now; move on to the next.
        if (e.code() != ErrorCode::kLineSearchFailure) throw;
      }
    }
    perCycle.push_back(current);
    cycles = cycle;
    if (cycleStart - current < config.relTol * cycleStart) break;
  }
  return SolveResult{std::move(state), initial, current, std::move(perCycle), std::move(trace), cycles};
}

RadianceImage edit_material(const RenderScene& scene, const std::vector<DsbrdfMaterial>& targets) {
  const std::size_t regions = scene.segmentation ? static_cast<std::size_t>(scene.segmentation->region_count()) : 1;
  if (targets.size() != regions) {
    throw Error(ErrorCode::kRegionCountMismatch,
                "expected " + std::to_string(regions) + " materials, got " + std::to_string(targets.size()));
  }
  RenderScene edited = scene;
  edited.materials = targets;
  return render(edited);
}

RadianceImage edit_material(const RenderScene& scene, const DsbrdfMaterial& target) {
  return edit_material(scene, std::vector<DsbrdfMaterial>{target});
}

}  // namespace dsbrdf
