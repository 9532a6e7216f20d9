#pragma once

// Closed-form spectral realization on the uniform 1D mesh. Fields are
// expanded in the discrete eigenvectors sqrt(2) sin(j pi x_i) of the (A, M)
// pencil, with coefficients obtained from the assembled mass matrix.

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "subdiff/cq.hpp"
#include "subdiff/fem.hpp"

namespace subdiff {

/// Coefficients of a field in the discrete eigenbasis.
struct ModalField {
  Eigen::VectorXd coefficients;  ///< c_j, j = 1..K (0-based storage)
};

class SpectralSolver1D {
 public:
  SpectralSolver1D(const FemSpace& space, double alpha, double T);

  const FemSpace& space() const { return *space_; }
  const SpectralBasis1D& basis() const { return basis_; }
  double alpha() const { return alpha_; }
  double T() const { return T_; }

  ModalField to_modal(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::VectorXd from_modal(const ModalField& m) const;

  /// E_{alpha,1}(-lambda_j^h t^alpha) for every mode.
  Eigen::VectorXd ml_multipliers(double t) const;

  /// Semidiscrete forward solution F_h(t) u0.
  Eigen::VectorXd semi_forward(const Eigen::Ref<const Eigen::VectorXd>& u0, double t) const;

  /// Regularized semidiscrete reconstruction at time t from observation g:
  /// modal multiplier E(-lambda t^alpha) / (gamma + E(-lambda T^alpha)).
  Eigen::VectorXd semi_backward(const Eigen::Ref<const Eigen::VectorXd>& g, double gamma, double t) const;

  /// Fully discrete reconstruction: modal multiplier
  /// F_tau^n(lambda) / (gamma + F_tau^N(lambda)). Returns columns for all n
  /// when `steps` is empty, otherwise one column per requested step.
  Eigen::MatrixXd fully_backward(const Eigen::Ref<const Eigen::VectorXd>& g, double gamma, const TimeGrid& grid,
                                 const std::vector<int>& steps = {}) const;

  /// Fully discrete forward map F_{h,tau}^n u0 at the requested steps.
  Eigen::MatrixXd fully_forward(const Eigen::Ref<const Eigen::VectorXd>& u0, const TimeGrid& grid,
                                const std::vector<int>& steps) const;

  /// F_tau^n(lambda_j^h) for all n, j; cached per N.
  std::shared_ptr<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> discrete_table(
      const TimeGrid& grid) const;

 private:
  const FemSpace* space_;
  double alpha_;
  double T_;
  SpectralBasis1D basis_;
  Eigen::MatrixXd phi_;       // K x K, columns are eigenvectors
  Eigen::VectorXd phi_norm_;  // phi_j^T M phi_j
  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::shared_ptr<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>>
      tables_;
};

}  // namespace subdiff
