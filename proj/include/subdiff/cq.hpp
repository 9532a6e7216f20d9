#pragma once

// Backward-Euler convolution quadrature for the Caputo derivative of order
// alpha: weights b_j of (1 - xi)^alpha, the scalar discrete solution operator
// F_tau^n(lambda), and the mesh-general time stepper.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "subdiff/fem.hpp"

namespace subdiff {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct TimeGrid {
  double T = 1.0;
  int N = 1;

  TimeGrid() = default;
  TimeGrid(double T_, int N_) : T(T_), N(N_) {
    if (!(T_ > 0.0) || !std::isfinite(T_)) throw std::invalid_argument("TimeGrid: T must be positive");
    if (N_ < 1) throw std::invalid_argument("TimeGrid: N must be >= 1");
  }

  double tau() const { return T / N; }
  double t(int n) const { return n == N ? T : n * tau(); }
  /// Index n with t_n = t; throws if t is not a grid point of [0, T].
  int step_at(double t) const {
    const long n = std::lround(t / tau());
    if (n < 0 || n > N || std::abs(n * tau() - t) > 1e-9 * T) {
      throw std::invalid_argument("TimeGrid: t is not a grid point");
    }
    return static_cast<int>(n);
  }
};

template <typename Scalar = double>
struct CQWeights {
  Scalar alpha;
  VectorX<Scalar> b;  ///< b_0 .. b_N

  /// Partial sums S_n = b_0 + ... + b_n.
  VectorX<Scalar> partial_sums() const {
    VectorX<Scalar> s(b.size());
    Scalar acc = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) s(j) = acc += b(j);
    return s;
  }
};

template <typename Scalar = double>
CQWeights<Scalar> cq_weights(Scalar alpha, int N) {
  if (!(alpha > Scalar(0) && alpha < Scalar(1))) throw std::domain_error("cq_weights: alpha must lie in (0,1)");
  if (N < 0) throw std::invalid_argument("cq_weights: N must be >= 0");
  CQWeights<Scalar> w{alpha, VectorX<Scalar>(N + 1)};
  w.b(0) = Scalar(1);
  for (int j = 1; j <= N; ++j) w.b(j) = w.b(j - 1) * (Scalar(j - 1) - alpha) / Scalar(j);
  return w;
}

/// F_tau^0..F_tau^N for a single eigenvalue: the solution of
/// dbar_tau^alpha [F^n - F^0] + lambda F^n = 0 with F^0 = 1.
template <typename Scalar = double>
VectorX<Scalar> scalar_F(Scalar alpha, const TimeGrid& grid, Scalar lambda) {
  if (!(lambda >= Scalar(0))) throw std::domain_error("scalar_F: lambda must be >= 0");
  const auto w = cq_weights<Scalar>(alpha, grid.N);
  const VectorX<Scalar> s = w.partial_sums();
  using std::pow;
  const Scalar denom = Scalar(1) + lambda * pow(Scalar(grid.tau()), alpha);
  VectorX<Scalar> F(grid.N + 1);
  F(0) = Scalar(1);
  for (int n = 1; n <= grid.N; ++n) {
    Scalar hist = 0;
    for (int j = 1; j <= n; ++j) hist += w.b(j) * F(n - j);
    F(n) = (s(n) - hist) / denom;
  }
  return F;
}

/// F_tau^n(lambda_m) for many eigenvalues at once: (N+1) x lambdas.size(),
/// row n holding time level n.
Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> scalar_F_table(
    double alpha, const TimeGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& lambdas);

/// Expansion F_tau^n(lambda) = sum_k c_k w^k in the one-step resolvent
/// w = 1/(1 + lambda tau^alpha). All c_k are nonnegative and sum to one.
/// Tails with total mass below `tail_tolerance` are dropped.
struct ResolventExpansion {
  int step = 0;
  Eigen::VectorXd coefficients;  ///< c_0 .. c_{k_max}
};

std::vector<ResolventExpansion> resolvent_expansions(double alpha, const TimeGrid& grid, const std::vector<int>& steps,
                                                     double tail_tolerance = 1e-15);

/// Projected source values P_h f(t_n) (coefficient vectors) for n = 1..N.
using SourceFunction = std::function<Eigen::VectorXd(int n, double t)>;

/// Time stepper for dbar_tau^alpha (U_n - U_0) - Delta_h U_n = P_h f(t_n) on
/// one FemSpace. The step matrix M + tau^alpha A is factorized once.
///
/// forward_solve runs the scheme with its O(N^2) history sum. terminal_map and
/// propagate evaluate the same linear map through the resolvent expansion,
/// which costs one sparse solve per retained coefficient and no history.
/// Expansions are computed on first use and cached under a lock.
class FractionalStepper {
 public:
  FractionalStepper(const FemSpace& space, double alpha, TimeGrid grid);

  const FemSpace& space() const { return *space_; }
  double alpha() const { return alpha_; }
  const TimeGrid& grid() const { return grid_; }
  const CQWeights<double>& weights() const { return weights_; }

  /// Full trajectory U_0..U_N as columns (direct history convolution).
  Eigen::MatrixXd forward_solve(const Eigen::Ref<const Eigen::VectorXd>& u0, const SourceFunction& f = {}) const;

  /// U_N for f = 0, i.e. F_{h,tau}^N v.
  Eigen::VectorXd terminal_map(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  /// F_{h,tau}^n applied column-wise for each requested step (one matrix per step).
  std::vector<Eigen::MatrixXd> propagate(const Eigen::Ref<const Eigen::MatrixXd>& v,
                                         const std::vector<int>& steps) const;

  /// Column-wise terminal_map.
  Eigen::MatrixXd terminal_map_block(const Eigen::Ref<const Eigen::MatrixXd>& v) const;

  /// (M + tau^alpha A)^{-1} M x, the one-step resolvent.
  Eigen::MatrixXd resolvent(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

 private:
  std::shared_ptr<const ResolventExpansion> expansion(int step) const;

  const FemSpace* space_;
  double alpha_;
  TimeGrid grid_;
  double tau_alpha_;
  CQWeights<double> weights_;
  Eigen::SimplicialLDLT<SparseMatrix> step_solver_;
  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::shared_ptr<const ResolventExpansion>> expansions_;
};

}  // namespace subdiff
