#pragma once

// Quasi-boundary-value reconstruction on a general mesh:
//   (gamma I + F_{h,tau}^N) U_0 = P_h g_delta
// solved by conjugate gradients in the M-weighted inner product, in which the
// operator is symmetric with spectrum in [gamma, gamma + 1].

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subdiff/cq.hpp"

namespace subdiff {

struct QBVProblem {
  const FractionalStepper* stepper = nullptr;  ///< mesh, time grid and alpha
  double gamma = 0.0;
  Eigen::VectorXd observation;  ///< P_h g_delta

  QBVProblem(const FractionalStepper& s, double gamma_, Eigen::VectorXd obs);

  const FemSpace& space() const { return stepper->space(); }
};

struct CGConfig {
  double rel_tolerance = 1e-10;
  int max_iterations = 0;  ///< 0 selects 5 x interior_node_count

  int iteration_limit(int dofs) const { return max_iterations > 0 ? max_iterations : 5 * dofs; }
};

/// CG did not reach the requested residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(int iterations, double residual)
      : std::runtime_error("CG did not converge: " + std::to_string(iterations) +
                           " iterations, relative residual " + std::to_string(residual)),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

struct CGSolution {
  Eigen::MatrixXd values;         ///< one column per right-hand side
  std::vector<int> iterations;    ///< per column
  std::vector<double> residuals;  ///< final M-weighted relative residual per column
};

/// gamma v + F_{h,tau}^N v (column-wise).
Eigen::MatrixXd qbv_operator_apply(const FractionalStepper& stepper, double gamma,
                                   const Eigen::Ref<const Eigen::MatrixXd>& v);
Eigen::VectorXd qbv_operator_apply(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Independent CG solves for each column of `observations`, advanced in
/// lockstep so operator applications are batched. Throws ConvergenceError
/// if any column misses the tolerance within the iteration limit.
CGSolution solve_initial_block(const FractionalStepper& stepper, double gamma,
                               const Eigen::Ref<const Eigen::MatrixXd>& observations, const CGConfig& cfg = {});

/// Single right-hand side; `info` (optional) receives iteration count and residual.
Eigen::VectorXd solve_initial(const QBVProblem& p, const CGConfig& cfg = {}, CGSolution* info = nullptr);

struct Trajectory {
  Eigen::MatrixXd states;         ///< columns U_0..U_N (or requested snapshots)
  double terminal_residual = 0;   ///< ||gamma U_0 + U_N - g||_M / ||g||_M
  bool consistent = true;         ///< terminal_residual <= 10 * rel_tolerance
};

/// Forward solve with f = 0 from the reconstructed initial state.
Trajectory reconstruct_trajectory(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& u0,
                                  const CGConfig& cfg = {});

/// Reconstruction at selected steps only (resolvent expansion, no history).
Trajectory reconstruct_snapshots(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& u0,
                                 const std::vector<int>& steps, const CGConfig& cfg = {});

/// Data reduction for a nonzero source: returns g - Z_N where Z solves the
/// forward scheme from zero initial data with source f.
Eigen::VectorXd source_reduction(const FractionalStepper& stepper, const Eigen::Ref<const Eigen::VectorXd>& g,
                                 const SourceFunction& f);

}  // namespace subdiff
