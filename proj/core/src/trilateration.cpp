#include "rssiloc/trilateration.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "rssiloc/error.hpp"

namespace rssiloc::trilateration {

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

struct Refined {
  Vector2d point;
  double residual;
  int iterations;
};

double residual_at(std::span<const Vector2d> centers, std::span<const double> d2, const Vector2d& p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double r = (p - centers[i]).squaredNorm() - d2[i];
    sum += r * r;
  }
  return sum;
}

// Gauss-Newton on r_i(p) = |p - c_i|^2 - d_i^2 with step halving, so the
// objective never increases. The second-order term sum(r_i * 2I) is added to
// J^T J whenever that keeps the matrix positive definite: inconsistent
// circles leave large residuals, where plain Gauss-Newton only converges
// linearly.
Refined gauss_newton(std::span<const Vector2d> centers, std::span<const double> d2, Vector2d p,
                     const SolverOptions& options) {
  double current = residual_at(centers, d2, p);
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    Matrix2d jtj = Matrix2d::Zero();
    Vector2d jtr = Vector2d::Zero();
    double curvature = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const Vector2d diff = p - centers[i];
      const Vector2d grad = 2.0 * diff;
      const double r = diff.squaredNorm() - d2[i];
      jtj += grad * grad.transpose();
      jtr += grad * r;
      curvature += 2.0 * r;
    }
    Matrix2d hessian = jtj;
    hessian.diagonal().array() += curvature;
    Eigen::LLT<Matrix2d> newton(hessian);
    Vector2d step;
    if (newton.info() == Eigen::Success && hessian.determinant() > 1e-12 * hessian.trace() * hessian.trace()) {
      step = -newton.solve(jtr);
    } else {
      // Tiny ridge keeps the solve defined when every gradient is parallel.
      jtj.diagonal().array() += 1e-12 * (jtj.trace() + 1e-300);
      step = -jtj.ldlt().solve(jtr);
    }
    if (!step.allFinite()) break;

    double scale = 1.0;
    double candidate = residual_at(centers, d2, p + step);
    for (int h = 0; h < 40 && candidate > current; ++h) {
      scale *= 0.5;
      candidate = residual_at(centers, d2, p + scale * step);
    }
    if (candidate > current) break;
    p += scale * step;
    current = candidate;
    if (scale * step.norm() < options.step_tolerance) {
      ++it;
      break;
    }
  }
  return {p, current, it};
}

// Points where circles i and j meet, or the point between them on the line
// of centers when they do not.
void pair_seeds(const Vector2d& ci, double ri, const Vector2d& cj, double rj, std::vector<Vector2d>& out) {
  const Vector2d delta = cj - ci;
  const double dist = delta.norm();
  if (dist == 0.0) return;
  const Vector2d u = delta / dist;
  if (dist > ri + rj || dist < std::abs(ri - rj)) {
    // Disjoint or nested: take the midpoint of the gap between the circles.
    const double sgn_i = (dist < std::abs(ri - rj) && ri < rj) ? -1.0 : 1.0;
    const double sgn_j = (dist < std::abs(ri - rj) && rj < ri) ? 1.0 : -1.0;
    const Vector2d on_i = ci + sgn_i * ri * u;
    const Vector2d on_j = cj + sgn_j * rj * u;
    out.push_back(0.5 * (on_i + on_j));
    return;
  }
  const double along = (dist * dist + ri * ri - rj * rj) / (2.0 * dist);
  const double h = std::sqrt(std::max(0.0, ri * ri - along * along));
  const Vector2d base = ci + along * u;
  const Vector2d normal(-u.y(), u.x());
  out.push_back(base + h * normal);
  out.push_back(base - h * normal);
}

}  // namespace

double residual(std::span<const Anchor> anchors, const Position& p) {
  double sum = 0.0;
  for (const auto& a : anchors) {
    const double dx = p.x - a.center.x;
    const double dy = p.y - a.center.y;
    const double r = dx * dx + dy * dy - a.distance * a.distance;
    sum += r * r;
  }
  return sum;
}

PositionEstimate trilaterate(std::span<const Anchor> anchors, const SolverOptions& options) {
  const std::size_t m = anchors.size();
  if (m < 3) throw InputError("trilateration needs at least 3 anchors, got " + std::to_string(m));

  // Work relative to the anchor centroid; the result is translated back.
  Vector2d origin = Vector2d::Zero();
  for (const auto& a : anchors) {
    if (!std::isfinite(a.center.x) || !std::isfinite(a.center.y)) {
      throw InputError("anchor with non-finite position");
    }
    if (!(a.distance > 0.0) || !std::isfinite(a.distance)) {
      throw InputError("anchor distance must be finite and > 0");
    }
    origin += Vector2d(a.center.x, a.center.y);
  }
  origin /= static_cast<double>(m);

  std::vector<Vector2d> centers(m);
  std::vector<double> d2(m);
  for (std::size_t i = 0; i < m; ++i) {
    centers[i] = Vector2d(anchors[i].center.x, anchors[i].center.y) - origin;
    d2[i] = anchors[i].distance * anchors[i].distance;
  }

  // Subtracting circle 0 from circle i:
  //   2 (c_i - c_0) . p = d_0^2 - d_i^2 + |c_i|^2 - |c_0|^2
  Eigen::MatrixXd a(m - 1, 2);
  Eigen::VectorXd b(m - 1);
  for (std::size_t i = 1; i < m; ++i) {
    a.row(static_cast<Eigen::Index>(i - 1)) = 2.0 * (centers[i] - centers[0]).transpose();
    b(static_cast<Eigen::Index>(i - 1)) = d2[0] - d2[i] + centers[i].squaredNorm() - centers[0].squaredNorm();
  }
  const Matrix2d normal = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix2d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > options.max_condition) {
    throw GeometryError("anchors are collinear: normal matrix is singular");
  }
  const Vector2d linear = normal.ldlt().solve(a.transpose() * b);

  // The objective is a quartic that can have several local minima when the
  // circles disagree badly, so refine from a few deterministic seeds and keep
  // the lowest. The linearized solution goes first and wins ties.
  std::vector<Vector2d> seeds{linear, Vector2d::Zero()};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      pair_seeds(centers[i], anchors[i].distance, centers[j], anchors[j].distance, seeds);
    }
  }
  Refined best = gauss_newton(centers, d2, seeds.front(), options);
  if (best.residual > 1e-18) {
    for (std::size_t s = 1; s < seeds.size(); ++s) {
      Refined candidate = gauss_newton(centers, d2, seeds[s], options);
      if (candidate.residual < best.residual) best = candidate;
    }
  }

  PositionEstimate estimate;
  const Vector2d p = best.point + origin;
  estimate.position = {p.x(), p.y()};
  estimate.residual = residual(anchors, estimate.position);
  estimate.iterations = best.iterations;
  estimate.method_tag = "trilateration";
  return estimate;
}

}  // namespace rssiloc::trilateration
