#pragma once

#include <Eigen/Dense>

namespace subdiff {

/// Nodes and weights of a quadrature rule. For rules on [-1,1] `points` has one
/// column; for triangle rules it holds barycentric-free reference coordinates
/// (xi, eta) on the unit triangle {xi, eta >= 0, xi + eta <= 1}.
struct QuadratureRule {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1], computed by Newton iteration on the
/// three-term recurrence. Exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n);

/// Cached rule for small n. The returned reference stays valid for the program
/// lifetime and is safe to share between threads.
const QuadratureRule& gauss_legendre_cached(int n);

/// 7-point degree-5 rule on the reference triangle (weights sum to 1/2).
const QuadratureRule& triangle_rule_degree5();

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle, exact for
/// polynomials of degree 2n-2. Weights sum to 1/2.
QuadratureRule triangle_rule_collapsed(int n);

}  // namespace subdiff
