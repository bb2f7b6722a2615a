#include "dsbrdf/spline.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace dsbrdf::spline {

namespace {

constexpr auto kKnotVector = knots();

double normalized(double theta) { return std::clamp((theta - kThetaMin) / (kThetaMax - kThetaMin), 0.0, 1.0); }

// Index of the knot span [t_i, t_{i+1}) containing u, restricted to the
// non-degenerate spans kDegree .. kControlPoints-1.
int find_span(double u) {
  if (u >= kKnotVector[kControlPoints]) return kControlPoints - 1;
  int span = kDegree;
  while (span < kControlPoints - 1 && u >= kKnotVector[span + 1]) ++span;
  return span;
}

}  // namespace

std::array<double, kControlPoints> greville_abscissae() {
  std::array<double, kControlPoints> out{};
  for (int j = 0; j < kControlPoints; ++j) {
    out[j] = kThetaMin + (kThetaMax - kThetaMin) * 0.5 * (kKnotVector[j + 1] + kKnotVector[j + 2]);
  }
  return out;
}

Basis basis(double theta) {
  const double u = normalized(theta);
  const int span = find_span(u);

  // Triangular Cox-de Boor table for the kDegree+1 functions nonzero on `span`.
  std::array<double, kDegree + 1> n{1.0};
  std::array<double, kDegree + 1> left{};
  std::array<double, kDegree + 1> right{};
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = u - kKnotVector[span + 1 - j];
    right[j] = kKnotVector[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }

  Basis out{};
  for (int r = 0; r <= kDegree; ++r) out[span - kDegree + r] = n[r];
  return out;
}

double eval(const QuadBSpline& spline, double theta) {
  const Basis b = basis(theta);
  double v = 0.0;
  for (int j = 0; j < kControlPoints; ++j) v += b[j] * spline.controlPoints[j];
  return v;
}

QuadBSpline fit(std::span<const double> thetas, std::span<const double> values) {
  if (thetas.size() != values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "spline fit needs one value per theta");
  }
  if (thetas.size() < static_cast<std::size_t>(kControlPoints)) {
    throw Error(ErrorCode::kInvalidArgument,
                "spline fit needs at least 6 samples, got " + std::to_string(thetas.size()));
  }

  Eigen::Matrix<double, kControlPoints, kControlPoints> normal = Eigen::Matrix<double, kControlPoints, kControlPoints>::Zero();
  Eigen::Matrix<double, kControlPoints, 1> rhs = Eigen::Matrix<double, kControlPoints, 1>::Zero();
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const Basis b = basis(thetas[i]);
    const Eigen::Map<const Eigen::Matrix<double, kControlPoints, 1>> row(b.data());
    normal.noalias() += row * row.transpose();
    rhs.noalias() += row * values[i];
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kControlPoints, kControlPoints>> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw Error(ErrorCode::kRankDeficient, "spline normal equations are singular (condition " +
                                               std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");
  }

  const Eigen::Matrix<double, kControlPoints, 1> cp = normal.ldlt().solve(rhs);
  QuadBSpline out;
  for (int j = 0; j < kControlPoints; ++j) out.controlPoints[j] = cp[j];
  return out;
}

}  // namespace dsbrdf::spline
