#include "dsbrdf/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "dsbrdf/error.hpp"

namespace dsbrdf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

// d = -H g via the two-loop recursion with scaling gamma = s'y / y'y.
std::vector<double> two_loop(const std::deque<Pair>& pairs, std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    alpha[i] = pairs[i].rho * dot(pairs[i].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * pairs[i].y[j];
  }
  const Pair& last = pairs.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (double& v : q) v *= gamma;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double beta = pairs[i].rho * dot(pairs[i].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += pairs[i].s[j] * (alpha[i] - beta);
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

void LbfgsOptions::validate() const {
  if (memory < 1 || maxIterations < 0 || maxBacktracks < 1 || !(relTol >= 0.0) || !(gradTol >= 0.0) ||
      !(armijoC > 0.0 && armijoC < 1.0) || !(backtrackFactor > 0.0 && backtrackFactor < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid L-BFGS options");
  }
}

LbfgsResult lbfgs_minimize(const ValueAndGradient& f, std::vector<double> x0, const LbfgsOptions& options,
                           const LbfgsHooks& hooks) {
  options.validate();
  const std::size_t n = x0.size();
  LbfgsResult result;
  std::vector<double> x = std::move(x0);
  if (hooks.project) hooks.project(x);
  std::vector<double> g(n);
  double fx = f(x, g);
  if (!std::isfinite(fx) || !finite(g)) throw Error(ErrorCode::kInvalidArgument, "objective not finite at x0");
  if (hooks.projectGradient) hooks.projectGradient(x, g);
  result.trace.push_back(fx);
  result.stopReason = "maxIterations";

  std::deque<Pair> pairs;
  std::vector<double> xn(n), gn(n), step(n);

  // Backtracks along d from x; on success leaves the accepted point in xn/gn.
  auto line_search = [&](const std::vector<double>& d, double alpha0, double& fn) {
    double alpha = alpha0;
    for (int b = 0; b < options.maxBacktracks; ++b, alpha *= options.backtrackFactor) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + alpha * d[i];
      if (hooks.project) hooks.project(xn);
      for (std::size_t i = 0; i < n; ++i) step[i] = xn[i] - x[i];
      const double decrease = dot(g, step);
      if (!(decrease < 0.0)) continue;
      fn = f(xn, gn);
      if (std::isfinite(fn) && finite(gn) && fn <= fx + options.armijoC * decrease && fn < fx) return true;
    }
    return false;
  };

  for (int iter = 0; iter < options.maxIterations; ++iter) {
    if (norm_inf(g) < options.gradTol) {
      result.stopReason = "gradient";
      break;
    }
    std::vector<double> d;
    bool quasiNewton = !pairs.empty();
    if (quasiNewton) {
      d = two_loop(pairs, g);
      if (!(dot(g, d) < 0.0) || !finite(d)) quasiNewton = false;
    }
    double fn = 0.0;
    bool accepted = false;
    if (quasiNewton) accepted = line_search(d, 1.0, fn);
    if (!accepted) {
      // Steepest descent restart with a unit-length first trial step.
      pairs.clear();
      d.assign(g.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      accepted = line_search(d, std::min(1.0, 1.0 / norm2(g)), fn);
    }
    if (!accepted) {
      if (iter == 0) throw Error(ErrorCode::kLineSearchFailure, "no acceptable step from the starting point");
      result.stopReason = "lineSearch";
      break;
    }

    if (hooks.projectGradient) hooks.projectGradient(xn, gn);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = gn[i] - g[i];
    const double sy = dot(step, y);
    if (sy > 1e-12 * norm2(step) * norm2(y)) {
      pairs.push_back({step, std::move(y), 1.0 / sy});
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    const double fPrev = fx;
    x.swap(xn);
    g.swap(gn);
    fx = fn;
    ++result.iterations;
    result.trace.push_back(fx);
    if (hooks.onStep) hooks.onStep(result.iterations, fx, norm2(g));
    if (fPrev - fx <= options.relTol * std::abs(fPrev)) {
      result.stopReason = "relTol";
      break;
    }
  }
  result.x = std::move(x);
  result.value = fx;
  return result;
}

}  // namespace dsbrdf
