#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsbrdf/grad.hpp"
#include "dsbrdf/lbfgs.hpp"
#include "dsbrdf/render.hpp"

namespace dsbrdf {

// ---- Training-style losses ----

struct LossWeights {
  double wN = 1e4;
  double wM = 1e3;
  double wImage = 1.0;  // image-space L2 in place of a perceptual term
};

/// Sum over foreground of |n - n'|^2. Throws kShapeMismatch if sizes or masks differ.
double loss_normal(const NormalMap& pred, const NormalMap& gt);
/// Sum of squared differences of normalized material vectors. Throws kShapeMismatch on length mismatch.
double loss_material(std::span<const double> pred, std::span<const double> gt);
double loss_combined(const LossWeights& weights, double lNormal, double lMaterial, double lImage);

// ---- Post-optimization ----

struct SceneState {
  NormalMap normals;
  std::vector<DsbrdfMaterial> materials;
  EnvironmentMap env;
};

/// Minimize |render(n, m, L) - target|^2 + a |n - n'|^2 + b |L - L'|^2 over the free groups.
struct InverseProblem {
  RadianceImage target;
  SceneState init;
  double a = 1.0;
  double b = 10.0;
  Camera camera;
  std::optional<SegmentationMask> segmentation;
  GradientGroups freeGroups;

  void validate() const;
  RenderScene scene(const SceneState& state) const;
};

struct ObjectiveValue {
  double value = 0.0;
  SceneGradients gradients;  // raw material space; only free groups filled
};

ObjectiveValue objective(const InverseProblem& problem, const SceneState& state);
/// Same, restricted to the given gradient groups.
ObjectiveValue objective(const InverseProblem& problem, const SceneState& state, GradientGroups groups);

struct OptimizerConfig {
  int memoryPairs = 8;
  int innerItersPerGroup = 20;
  int maxCycles = 50;
  double relTol = 1e-6;
  double armijoC = 1e-4;
  double backtrackFactor = 0.5;
  int maxBacktracks = 25;
  std::vector<ParamGroup> cycleOrder = {ParamGroup::kNormal, ParamGroup::kLight, ParamGroup::kMaterial};

  void validate() const;
};

struct TraceEntry {
  int cycle = 0;
  ParamGroup group = ParamGroup::kNormal;
  int iter = 0;
  double objective = 0.0;
  double gnorm = 0.0;
};

/// "cycle group iter objective gnorm"
std::string format_trace_entry(const TraceEntry& entry);

struct SolveResult {
  SceneState state;
  double initialObjective = 0.0;
  double finalObjective = 0.0;
  std::vector<double> perCycleObjective;  // objective after each completed cycle
  std::vector<TraceEntry> trace;          // one entry per accepted step
  int cycles = 0;
};

/// Alternating projected L-BFGS, one property group at a time. Normals stay
/// unit length, radiance nonnegative, materials inside their normalization
/// ranges (optimized in normalized coordinates). Initial materials are first
/// clamped into range.
SolveResult solve(const InverseProblem& problem, const OptimizerConfig& config = {});

/// Re-renders the scene with its materials replaced (one per region).
RadianceImage edit_material(const RenderScene& scene, const std::vector<DsbrdfMaterial>& targets);
RadianceImage edit_material(const RenderScene& scene, const DsbrdfMaterial& target);

}  // namespace dsbrdf
