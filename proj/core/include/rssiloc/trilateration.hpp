#pragma once

#include <span>

#include "rssiloc/types.hpp"

namespace rssiloc::trilateration {

struct Anchor {
  Position center;
  double distance = 0.0;  // meters
};

struct SolverOptions {
  double step_tolerance = 1e-10;   // meters
  int max_iterations = 50;
  double max_condition = 1e12;     // normal-matrix condition number
};

/// Sum over anchors of (|p - c|^2 - d^2)^2.
double residual(std::span<const Anchor> anchors, const Position& p);

/// Position from three or more circles.
///
/// The circle equations are linearized by subtracting the first from the
/// others and solved in the least-squares sense; the result seeds a damped
/// Gauss-Newton refinement of the squared circle residuals (with the
/// residual curvature term included where the Hessian is positive definite).
/// Inconsistent inputs are also refined from the anchor centroid and from each
/// pairwise circle intersection; the lowest residual wins. When the circles
/// share a point the residual is ~0, otherwise the returned estimate is the
/// least-squares compromise and `residual` reports how far from consistent
/// the input was. Estimates are never clamped to any floor plan.
///
/// Throws InputError for fewer than three anchors or non-positive distances,
/// GeometryError when the anchors are (numerically) collinear.
PositionEstimate trilaterate(std::span<const Anchor> anchors, const SolverOptions& options = {});

}  // namespace rssiloc::trilateration
