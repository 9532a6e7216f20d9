#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "subdiff/mesh.hpp"
#include "subdiff/quadrature.hpp"

namespace subdiff {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Pointwise data f(x, y); the second coordinate is ignored in 1D.
using PointFunction = std::function<double(double, double)>;

/// Galerkin mass matrix (phi_i, phi_j) over interior nodes.
SparseMatrix assemble_mass(const Mesh& mesh);

/// Stiffness matrix (grad phi_i, grad phi_j) over interior nodes.
SparseMatrix assemble_stiffness(const Mesh& mesh);

struct ProjectionOptions {
  /// 1D jump locations of the data; cells containing one are integrated piecewise.
  std::vector<double> breakpoints;
  /// 2D rule on the reference triangle; degree-5 rule when null.
  const QuadratureRule* triangle_rule = nullptr;
};

/// Load vector b_i = (f, phi_i): 3-point Gauss per 1D cell (split at
/// breakpoints), degree-5 rule per triangle in 2D.
Eigen::VectorXd load_vector(const Mesh& mesh, const PointFunction& f, const ProjectionOptions& opts = {});

/// Nodal interpolant at interior nodes.
Eigen::VectorXd interpolate(const Mesh& mesh, const PointFunction& f);

/// Value of the P1 function with interior coefficients `u` at (x, y).
double evaluate(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& u, double x, double y = 0.0);

/// Matrix P with P(i, j) = phi_j^coarse(node_i^fine). Requires nested meshes.
SparseMatrix prolongation(const Mesh& coarse, const Mesh& fine);

/// Mesh with its assembled matrices and a factorized mass matrix.
/// Matrices are immutable after construction.
class FemSpace {
 public:
  explicit FemSpace(Mesh mesh);
  FemSpace(const FemSpace&) = delete;
  FemSpace& operator=(const FemSpace&) = delete;

  const Mesh& mesh() const { return mesh_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  int size() const { return mesh_.interior_node_count(); }

  /// Solves M c = b.
  Eigen::VectorXd solve_mass(const Eigen::Ref<const Eigen::VectorXd>& b) const;

  /// L2 projection P_h f.
  Eigen::VectorXd l2_project(const PointFunction& f, const ProjectionOptions& opts = {}) const;

  /// L2 projection of a P1 function living on a nested finer space.
  Eigen::VectorXd project_from(const FemSpace& fine, const Eigen::Ref<const Eigen::VectorXd>& u_fine) const;

  double norm(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  double inner(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) const;

 private:
  Mesh mesh_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  Eigen::SimplicialLDLT<SparseMatrix> mass_solver_;
};

/// Exact L2 norm u^T M u of a P1 function.
double l2_norm(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& u);

/// Exact L2 distance between a coarse P1 function and a P1 function on a
/// nested finer mesh. Throws std::invalid_argument on non-nested meshes.
double l2_error(const FemSpace& coarse, const Eigen::Ref<const Eigen::VectorXd>& u, const FemSpace& fine,
                const Eigen::Ref<const Eigen::VectorXd>& ref);

/// L2 distance between pointwise data and a P1 function by per-cell quadrature
/// (`points` Gauss points per 1D cell or collapsed n x n rule per triangle).
double l2_distance(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& u, const PointFunction& f,
                   int points = 7);

/// Closed-form eigenpairs of the 1D pencil (A, M) on the uniform mesh.
struct SpectralBasis1D {
  int K = 0;
  double h = 0.0;
  Eigen::VectorXd eigenvalues;  ///< lambda_j^h, j = 1..K (stored 0-based)

  /// sqrt(2) sin(j pi x_i) sampled at the interior nodes (K x K, column j-1).
  Eigen::MatrixXd vectors() const;
  Eigen::VectorXd vector(int j) const;
};

SpectralBasis1D eigenpairs_1d(int K);

}  // namespace subdiff
