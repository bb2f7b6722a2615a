#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dsbrdf {

struct LbfgsOptions {
  int memory = 8;
  int maxIterations = 100;
  double relTol = 1e-6;       // stop when (f_prev - f) <= relTol * |f_prev|
  double gradTol = 1e-12;     // stop when the projected gradient's max-norm drops below this
  double armijoC = 1e-4;
  double backtrackFactor = 0.5;
  int maxBacktracks = 25;

  void validate() const;
};

/// Returns f(x) and writes the gradient into g (same length as x).
using ValueAndGradient = std::function<double(std::span<const double> x, std::span<double> g)>;

/// Optional feasibility hooks. `project` maps a candidate onto the feasible
/// set; `projectGradient` removes gradient components that point out of it.
/// Armijo acceptance is tested on the projected candidate.
struct LbfgsHooks {
  std::function<void(std::span<double> x)> project;
  std::function<void(std::span<const double> x, std::span<double> g)> projectGradient;
  /// Called after every accepted step with (iteration, value, |projected g|_2).
  std::function<void(int, double, double)> onStep;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // value at the start and after each accepted step
  std::string stopReason;     // "gradient", "relTol", "maxIterations", "lineSearch"
};

/// Two-loop-recursion L-BFGS with projected Armijo backtracking. Accepted
/// values strictly decrease. Throws kInvalidArgument when f(x0) is not finite
/// and kLineSearchFailure when no step is accepted at the first iterate.
LbfgsResult lbfgs_minimize(const ValueAndGradient& f, std::vector<double> x0, const LbfgsOptions& options = {},
                           const LbfgsHooks& hooks = {});

}  // namespace dsbrdf
