#pragma once

#include <algorithm>
#include <array>
#include <span>

#include "dsbrdf/core.hpp"

// Clamped quadratic B-spline over theta_d in [0, pi/2] with knot vector
// [0, 0, 0, 1/4, 1/2, 3/4, 1, 1, 1] (normalized) and six control points.
namespace dsbrdf::spline {

inline constexpr int kDegree = 2;
inline constexpr int kControlPoints = 6;
inline constexpr int kKnots = 9;
inline constexpr int kSpans = 4;
inline constexpr double kThetaMin = 0.0;
inline constexpr double kThetaMax = kPi / 2.0;

using Basis = std::array<double, kControlPoints>;

struct QuadBSpline {
  std::array<double, kControlPoints> controlPoints{};
};

/// Knot vector in normalized [0, 1] coordinates.
constexpr std::array<double, kKnots> knots() { return {0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0}; }

/// Greville abscissae (theta at which each control point has its peak influence).
std::array<double, kControlPoints> greville_abscissae();

/// All six basis weights at theta (Cox-de Boor); theta is clamped to the domain.
Basis basis(double theta);

double eval(const QuadBSpline& spline, double theta);

/// Least-squares fit through (theta, value) samples via the 6x6 normal
/// equations. Throws kRankDeficient when the system is singular or its
/// condition number exceeds 1e12, kInvalidArgument on size mismatch or fewer
/// than six samples.
QuadBSpline fit(std::span<const double> thetas, std::span<const double> values);

/// The three nonzero weights on the span containing theta. `first` is the
/// index of the control point multiplying weights[0]. Branch-light so it can be
/// inlined into vectorized loops; agrees with basis() to rounding.
struct LocalBasis {
  int first;
  double w0, w1, w2;
};

inline LocalBasis local_basis(double theta) {
  const double t = std::clamp(theta * (static_cast<double>(kSpans) / kThetaMax), 0.0, static_cast<double>(kSpans));
  const int span = std::min(static_cast<int>(t), kSpans - 1);
  const double x = t - span;
  const double a0 = span == 0 ? 1.0 : 0.5;
  const double a2 = span == kSpans - 1 ? 1.0 : 0.5;
  const double w0 = a0 * (1.0 - x) * (1.0 - x);
  const double w2 = a2 * x * x;
  return {span, w0, 1.0 - w0 - w2, w2};
}

}  // namespace dsbrdf::spline
