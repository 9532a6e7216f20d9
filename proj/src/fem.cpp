#include "subdiff/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace subdiff {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct Triangle {
  Eigen::Vector2d v0, v1, v2;
  double area;
  Eigen::Matrix<double, 3, 2> grads;  // gradient of each barycentric basis function
};

Triangle triangle(const Mesh& mesh, const std::array<int, 3>& c) {
  Triangle t;
  t.v0 = mesh.nodes.row(c[0]).transpose();
  t.v1 = mesh.nodes.row(c[1]).transpose();
  t.v2 = mesh.nodes.row(c[2]).transpose();
  const Eigen::Vector2d e1 = t.v1 - t.v0, e2 = t.v2 - t.v0;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  t.area = 0.5 * std::abs(det);
  Eigen::Matrix2d jac;
  jac << e1, e2;
  const Eigen::Matrix2d inv_t = jac.inverse().transpose();
  // reference gradients of (1 - xi - eta, xi, eta)
  Eigen::Matrix<double, 3, 2> ref;
  ref << -1, -1, 1, 0, 0, 1;
  t.grads = ref * inv_t.transpose();
  return t;
}

template <typename LocalFn>
SparseMatrix assemble(const Mesh& mesh, LocalFn&& local) {
  Triplets trips;
  const int nv = mesh.vertices_per_cell();
  for (const auto& c : mesh.cells) {
    const Eigen::Matrix3d ke = local(c);
    for (int a = 0; a < nv; ++a) {
      const int ia = mesh.dof[c[a]];
      if (ia < 0) continue;
      for (int b = 0; b < nv; ++b) {
        const int ib = mesh.dof[c[b]];
        if (ib < 0) continue;
        trips.emplace_back(ia, ib, ke(a, b));
      }
    }
  }
  SparseMatrix out(mesh.interior_node_count(), mesh.interior_node_count());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

// Integrates f * phi_a over [x0, x1] inside the 1D cell [xa, xb].
void accumulate_segment(const PointFunction& f, double xa, double xb, double x0, double x1, double& la, double& lb) {
  const auto& g = gauss_legendre_cached(3);
  const double half = 0.5 * (x1 - x0), mid = 0.5 * (x1 + x0);
  for (Eigen::Index q = 0; q < g.size(); ++q) {
    const double x = mid + half * g.points(q, 0);
    const double fx = f(x, 0.0) * g.weights(q) * half;
    const double s = (x - xa) / (xb - xa);
    la += fx * (1.0 - s);
    lb += fx * s;
  }
}

}  // namespace

SparseMatrix assemble_mass(const Mesh& mesh) {
  if (mesh.dim == 1) {
    return assemble(mesh, [&](const std::array<int, 3>& c) {
      const double len = mesh.nodes(c[1], 0) - mesh.nodes(c[0], 0);
      Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
      m.topLeftCorner<2, 2>() << 2, 1, 1, 2;
      return Eigen::Matrix3d(m * (len / 6.0));
    });
  }
  return assemble(mesh, [&](const std::array<int, 3>& c) {
    const Triangle t = triangle(mesh, c);
    Eigen::Matrix3d m = Eigen::Matrix3d::Constant(1.0);
    m.diagonal().setConstant(2.0);
    return Eigen::Matrix3d(m * (t.area / 12.0));
  });
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  if (mesh.dim == 1) {
    return assemble(mesh, [&](const std::array<int, 3>& c) {
      const double len = mesh.nodes(c[1], 0) - mesh.nodes(c[0], 0);
      Eigen::Matrix3d k = Eigen::Matrix3d::Zero();
      k.topLeftCorner<2, 2>() << 1, -1, -1, 1;
      return Eigen::Matrix3d(k / len);
    });
  }
  return assemble(mesh, [&](const std::array<int, 3>& c) {
    const Triangle t = triangle(mesh, c);
    return Eigen::Matrix3d(t.area * t.grads * t.grads.transpose());
  });
}

Eigen::VectorXd load_vector(const Mesh& mesh, const PointFunction& f, const ProjectionOptions& opts) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.interior_node_count());
  if (mesh.dim == 1) {
    for (const auto& c : mesh.cells) {
      const double xa = mesh.nodes(c[0], 0), xb = mesh.nodes(c[1], 0);
      std::vector<double> cuts{xa};
      for (double p : opts.breakpoints) {
        if (p > xa && p < xb) cuts.push_back(p);
      }
      cuts.push_back(xb);
      std::sort(cuts.begin(), cuts.end());
      double la = 0.0, lb = 0.0;
      for (std::size_t s = 0; s + 1 < cuts.size(); ++s) accumulate_segment(f, xa, xb, cuts[s], cuts[s + 1], la, lb);
      if (mesh.dof[c[0]] >= 0) b(mesh.dof[c[0]]) += la;
      if (mesh.dof[c[1]] >= 0) b(mesh.dof[c[1]]) += lb;
    }
    return b;
  }
  const QuadratureRule& rule = opts.triangle_rule ? *opts.triangle_rule : triangle_rule_degree5();
  for (const auto& c : mesh.cells) {
    const Triangle t = triangle(mesh, c);
    Eigen::Vector3d local = Eigen::Vector3d::Zero();
    for (Eigen::Index q = 0; q < rule.size(); ++q) {
      const double xi = rule.points(q, 0), eta = rule.points(q, 1);
      const Eigen::Vector2d p = t.v0 + xi * (t.v1 - t.v0) + eta * (t.v2 - t.v0);
      const double w = rule.weights(q) * 2.0 * t.area * f(p.x(), p.y());
      local += w * Eigen::Vector3d(1.0 - xi - eta, xi, eta);
    }
    for (int a = 0; a < 3; ++a) {
      if (mesh.dof[c[a]] >= 0) b(mesh.dof[c[a]]) += local(a);
    }
  }
  return b;
}

Eigen::VectorXd interpolate(const Mesh& mesh, const PointFunction& f) {
  Eigen::VectorXd u(mesh.interior_node_count());
  for (int i = 0; i < u.size(); ++i) {
    const int n = mesh.dof_node[i];
    u(i) = f(mesh.nodes(n, 0), mesh.dim == 2 ? mesh.nodes(n, 1) : 0.0);
  }
  return u;
}

double evaluate(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& u, double x, double y) {
  auto value = [&](int node) { return mesh.dof[node] >= 0 ? u(mesh.dof[node]) : 0.0; };
  if (mesh.dim == 1) {
    const int cells = mesh.K + 1;
    const int i = std::clamp(static_cast<int>(std::floor(x / mesh.h)), 0, cells - 1);
    const double s = x / mesh.h - i;
    return (1.0 - s) * value(i) + s * value(i + 1);
  }
  const int K = mesh.K, n1 = K + 1;
  const int i = std::clamp(static_cast<int>(std::floor(x / mesh.h)), 0, K - 1);
  const int j = std::clamp(static_cast<int>(std::floor(y / mesh.h)), 0, K - 1);
  const double s = x / mesh.h - i, t = y / mesh.h - j;
  const double u00 = value(j * n1 + i), u10 = value(j * n1 + i + 1);
  const double u11 = value((j + 1) * n1 + i + 1), u01 = value((j + 1) * n1 + i);
  if (s >= t) return u00 + s * (u10 - u00) + t * (u11 - u10);
  return u00 + t * (u01 - u00) + s * (u11 - u01);
}

SparseMatrix prolongation(const Mesh& coarse, const Mesh& fine) {
  if (!is_nested(coarse, fine)) throw std::invalid_argument("prolongation: meshes are not nested");
  Triplets trips;
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(coarse.interior_node_count());
  // Each fine node lies in a coarse cell; evaluate the coarse hat functions there.
  for (int fi = 0; fi < fine.interior_node_count(); ++fi) {
    const int n = fine.dof_node[fi];
    const double x = fine.nodes(n, 0), y = fine.dim == 2 ? fine.nodes(n, 1) : 0.0;
    std::vector<int> candidates;
    if (coarse.dim == 1) {
      const int i = std::clamp(static_cast<int>(std::floor(x / coarse.h)), 0, coarse.K);
      candidates = {i, i + 1};
    } else {
      const int K = coarse.K, n1 = K + 1;
      const int i = std::clamp(static_cast<int>(std::floor(x / coarse.h)), 0, K - 1);
      const int j = std::clamp(static_cast<int>(std::floor(y / coarse.h)), 0, K - 1);
      candidates = {j * n1 + i, j * n1 + i + 1, (j + 1) * n1 + i, (j + 1) * n1 + i + 1};
    }
    for (int cn : candidates) {
      const int cd = coarse.dof[cn];
      if (cd < 0) continue;
      unit(cd) = 1.0;
      const double w = evaluate(coarse, unit, x, y);
      unit(cd) = 0.0;
      if (std::abs(w) > 1e-14) trips.emplace_back(fi, cd, w);
    }
  }
  SparseMatrix p(fine.interior_node_count(), coarse.interior_node_count());
  p.setFromTriplets(trips.begin(), trips.end());
  return p;
}

FemSpace::FemSpace(Mesh mesh)
    : mesh_(std::move(mesh)), mass_(assemble_mass(mesh_)), stiffness_(assemble_stiffness(mesh_)) {
  mass_solver_.compute(mass_);
  if (mass_solver_.info() != Eigen::Success) throw std::runtime_error("FemSpace: mass matrix factorization failed");
}

Eigen::VectorXd FemSpace::solve_mass(const Eigen::Ref<const Eigen::VectorXd>& b) const {
  return mass_solver_.solve(Eigen::VectorXd(b));
}

Eigen::VectorXd FemSpace::l2_project(const PointFunction& f, const ProjectionOptions& opts) const {
  return solve_mass(load_vector(mesh_, f, opts));
}

Eigen::VectorXd FemSpace::project_from(const FemSpace& fine, const Eigen::Ref<const Eigen::VectorXd>& u_fine) const {
  const SparseMatrix p = prolongation(mesh_, fine.mesh());
  return solve_mass(p.transpose() * (fine.mass() * u_fine));
}

double FemSpace::norm(const Eigen::Ref<const Eigen::VectorXd>& u) const { return std::sqrt(inner(u, u)); }

double FemSpace::inner(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return u.dot(mass_ * v);
}

double l2_norm(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& u) {
  return std::sqrt(u.dot(assemble_mass(mesh) * u));
}

double l2_error(const FemSpace& coarse, const Eigen::Ref<const Eigen::VectorXd>& u, const FemSpace& fine,
                const Eigen::Ref<const Eigen::VectorXd>& ref) {
  if (!is_nested(coarse.mesh(), fine.mesh())) throw std::invalid_argument("l2_error: meshes are not nested");
  const Eigen::VectorXd e = ref - prolongation(coarse.mesh(), fine.mesh()) * u;
  return fine.norm(e);
}

double l2_distance(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& u, const PointFunction& f,
                   int points) {
  auto value = [&](int node) { return mesh.dof[node] >= 0 ? u(mesh.dof[node]) : 0.0; };
  double sum = 0.0;
  if (mesh.dim == 1) {
    const QuadratureRule g = gauss_legendre(points);
    for (const auto& c : mesh.cells) {
      const double xa = mesh.nodes(c[0], 0), xb = mesh.nodes(c[1], 0);
      const double ua = value(c[0]), ub = value(c[1]);
      for (Eigen::Index q = 0; q < g.size(); ++q) {
        const double s = 0.5 * (g.points(q, 0) + 1.0);
        const double x = xa + s * (xb - xa);
        const double e = f(x, 0.0) - ((1.0 - s) * ua + s * ub);
        sum += 0.5 * (xb - xa) * g.weights(q) * e * e;
      }
    }
    return std::sqrt(sum);
  }
  const QuadratureRule rule = triangle_rule_collapsed(points);
  for (const auto& c : mesh.cells) {
    const Triangle t = triangle(mesh, c);
    const double u0 = value(c[0]), u1 = value(c[1]), u2 = value(c[2]);
    for (Eigen::Index q = 0; q < rule.size(); ++q) {
      const double xi = rule.points(q, 0), eta = rule.points(q, 1);
      const Eigen::Vector2d p = t.v0 + xi * (t.v1 - t.v0) + eta * (t.v2 - t.v0);
      const double e = f(p.x(), p.y()) - ((1.0 - xi - eta) * u0 + xi * u1 + eta * u2);
      sum += rule.weights(q) * 2.0 * t.area * e * e;
    }
  }
  return std::sqrt(sum);
}

Eigen::MatrixXd SpectralBasis1D::vectors() const {
  Eigen::MatrixXd v(K, K);
  for (int j = 1; j <= K; ++j) v.col(j - 1) = vector(j);
  return v;
}

Eigen::VectorXd SpectralBasis1D::vector(int j) const {
  Eigen::VectorXd v(K);
  for (int i = 1; i <= K; ++i) v(i - 1) = std::sqrt(2.0) * std::sin(j * std::numbers::pi * i * h);
  return v;
}

SpectralBasis1D eigenpairs_1d(int K) {
  if (K < 1) throw std::invalid_argument("eigenpairs_1d: K must be >= 1");
  SpectralBasis1D basis;
  basis.K = K;
  basis.h = 1.0 / (K + 1);
  basis.eigenvalues.resize(K);
  const double h = basis.h;
  for (int j = 1; j <= K; ++j) {
    const double c = std::cos(j * std::numbers::pi * h);
    // 1 - cos(a) = 2 sin^2(a/2) avoids cancellation for small a
    const double s = std::sin(0.5 * j * std::numbers::pi * h);
    basis.eigenvalues(j - 1) = 6.0 / (h * h) * (2.0 * s * s) / (2.0 + c);
  }
  return basis;
}

}  // namespace subdiff
