#include "subdiff/mesh.hpp"

#include <stdexcept>

namespace subdiff {

Eigen::MatrixXd Mesh::dof_coordinates() const {
  Eigen::MatrixXd xy(interior_node_count(), dim);
  for (int i = 0; i < interior_node_count(); ++i) xy.row(i) = nodes.row(dof_node[i]);
  return xy;
}

Mesh make_mesh_1d(int K) {
  if (K < 1) throw std::invalid_argument("make_mesh_1d: K must be >= 1");
  Mesh m;
  m.dim = 1;
  m.K = K;
  m.h = 1.0 / (K + 1);
  m.nodes.resize(K + 2, 1);
  m.dof.assign(K + 2, -1);
  for (int i = 0; i <= K + 1; ++i) m.nodes(i, 0) = i * m.h;
  m.nodes(K + 1, 0) = 1.0;
  for (int i = 1; i <= K; ++i) {
    m.dof[i] = i - 1;
    m.dof_node.push_back(i);
  }
  for (int i = 0; i <= K; ++i) m.cells.push_back({i, i + 1, -1});
  return m;
}

Mesh make_mesh_2d(int K) {
  if (K < 2) throw std::invalid_argument("make_mesh_2d: K must be >= 2");
  Mesh m;
  m.dim = 2;
  m.K = K;
  m.h = 1.0 / K;
  const int n1 = K + 1;
  m.nodes.resize(n1 * n1, 2);
  m.dof.assign(n1 * n1, -1);
  auto id = [n1](int i, int j) { return j * n1 + i; };
  for (int j = 0; j <= K; ++j) {
    for (int i = 0; i <= K; ++i) {
      m.nodes(id(i, j), 0) = (i == K) ? 1.0 : i * m.h;
      m.nodes(id(i, j), 1) = (j == K) ? 1.0 : j * m.h;
      if (i > 0 && i < K && j > 0 && j < K) {
        m.dof[id(i, j)] = static_cast<int>(m.dof_node.size());
        m.dof_node.push_back(id(i, j));
      }
    }
  }
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) {
      m.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return m;
}

Mesh make_mesh(int dim, int K) {
  if (dim == 1) return make_mesh_1d(K);
  if (dim == 2) return make_mesh_2d(K);
  throw std::invalid_argument("make_mesh: dim must be 1 or 2");
}

bool is_nested(const Mesh& coarse, const Mesh& fine) {
  if (coarse.dim != fine.dim) return false;
  if (coarse.dim == 1) return (fine.K + 1) % (coarse.K + 1) == 0;
  return fine.K % coarse.K == 0;
}

}  // namespace subdiff
