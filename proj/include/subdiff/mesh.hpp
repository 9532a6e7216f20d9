#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace subdiff {

/// Uniform P1 mesh on (0,1) or (0,1)^2 with homogeneous Dirichlet boundary.
///
/// 1D: K interior nodes, h = 1/(K+1).
/// 2D: K subintervals per side, h = 1/K, (K-1)^2 interior nodes; each cell is
///     split along its lower-left to upper-right diagonal.
///
/// Degrees of freedom are the interior nodes, numbered lexicographically.
struct Mesh {
  int dim = 1;
  int K = 0;
  double h = 0.0;
  Eigen::MatrixXd nodes;                   ///< node_count x dim
  std::vector<std::array<int, 3>> cells;   ///< 1D: (a, b, -1); 2D: triangle vertices
  std::vector<int> dof;                    ///< node -> dof index, -1 on the boundary
  std::vector<int> dof_node;               ///< dof -> node index

  Eigen::Index node_count() const { return nodes.rows(); }
  int interior_node_count() const { return static_cast<int>(dof_node.size()); }
  int vertices_per_cell() const { return dim + 1; }

  /// Coordinates of the interior nodes, interior_node_count x dim.
  Eigen::MatrixXd dof_coordinates() const;
};

Mesh make_mesh_1d(int K);
Mesh make_mesh_2d(int K);

/// Builds a mesh from (dim, K).
Mesh make_mesh(int dim, int K);

/// True if every node and cell of `coarse` is resolved by `fine`.
bool is_nested(const Mesh& coarse, const Mesh& fine);

}  // namespace subdiff
