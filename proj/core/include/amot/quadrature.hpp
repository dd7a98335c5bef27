#pragma once

#include <span>

namespace amot {

/// Barycentric quadrature point on the reference triangle. Weights sum to the
/// reference-element measure 1/2, so for a physical triangle E
///   \int_E f = 2|E| * sum_q w_q f(x_q).
struct TriQuadPoint {
  double l0, l1, l2;
  double w;
};

/// Quadrature point on the reference edge [0,1]; weights sum to 1, so
///   \int_e f = h_e * sum_q w_q f(x(t_q)).
struct EdgeQuadPoint {
  double t;
  double w;
};

/// 6-point rule, exact for polynomial degree 4 (default assembly rule).
std::span<const TriQuadPoint> tri_rule_deg4();

/// 12-point rule, exact for degree 6 (residual norms, verification).
std::span<const TriQuadPoint> tri_rule_deg6();

/// 3-point Gauss rule, exact for degree 5.
std::span<const EdgeQuadPoint> edge_rule_deg5();

}  // namespace amot
