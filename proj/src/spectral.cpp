#include "subdiff/spectral.hpp"

#include <stdexcept>

#include "subdiff/mittag_leffler.hpp"

namespace subdiff {

SpectralSolver1D::SpectralSolver1D(const FemSpace& space, double alpha, double T)
    : space_(&space), alpha_(alpha), T_(T) {
  if (space.mesh().dim != 1) throw std::invalid_argument("SpectralSolver1D: requires a 1D mesh");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("SpectralSolver1D: alpha must lie in (0,1]");
  if (!(T > 0.0)) throw std::invalid_argument("SpectralSolver1D: T must be positive");
  basis_ = eigenpairs_1d(space.mesh().K);
  phi_ = basis_.vectors();
  phi_norm_ = (phi_.transpose() * (space.mass() * phi_)).diagonal();
}

ModalField SpectralSolver1D::to_modal(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != phi_.rows()) throw std::invalid_argument("to_modal: field has wrong size");
  const Eigen::VectorXd mv = space_->mass() * v;
  return {(phi_.transpose() * mv).cwiseQuotient(phi_norm_)};
}

Eigen::VectorXd SpectralSolver1D::from_modal(const ModalField& m) const { return phi_ * m.coefficients; }

Eigen::VectorXd SpectralSolver1D::ml_multipliers(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("ml_multipliers: t must be >= 0");
  Eigen::VectorXd e(basis_.K);
  const double ta = std::pow(t, alpha_);
  for (int j = 0; j < basis_.K; ++j) e(j) = ml_eval(alpha_, basis_.eigenvalues(j) * ta);
  return e;
}

Eigen::VectorXd SpectralSolver1D::semi_forward(const Eigen::Ref<const Eigen::VectorXd>& u0, double t) const {
  ModalField m = to_modal(u0);
  m.coefficients.array() *= ml_multipliers(t).array();
  return from_modal(m);
}

Eigen::VectorXd SpectralSolver1D::semi_backward(const Eigen::Ref<const Eigen::VectorXd>& g, double gamma,
                                                double t) const {
  if (!(gamma > 0.0)) throw std::domain_error("semi_backward: gamma must be > 0");
  ModalField m = to_modal(g);
  const Eigen::ArrayXd num = ml_multipliers(t).array();
  const Eigen::ArrayXd den = gamma + ml_multipliers(T_).array();
  m.coefficients.array() *= num / den;
  return from_modal(m);
}

std::shared_ptr<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
SpectralSolver1D::discrete_table(const TimeGrid& grid) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = tables_.find(grid.N);
  if (it != tables_.end()) return it->second;
  auto table = std::make_shared<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      scalar_F_table(alpha_, TimeGrid(T_, grid.N), basis_.eigenvalues));
  tables_.emplace(grid.N, table);
  return table;
}

Eigen::MatrixXd SpectralSolver1D::fully_backward(const Eigen::Ref<const Eigen::VectorXd>& g, double gamma,
                                                 const TimeGrid& grid, const std::vector<int>& steps) const {
  if (!(gamma > 0.0)) throw std::domain_error("fully_backward: gamma must be > 0");
  if (grid.T != T_) throw std::invalid_argument("fully_backward: grid horizon differs from the solver's T");
  const auto table = discrete_table(grid);
  std::vector<int> which = steps;
  if (which.empty()) {
    for (int n = 0; n <= grid.N; ++n) which.push_back(n);
  }
  const Eigen::ArrayXd c = to_modal(g).coefficients.array() / (gamma + table->row(grid.N).transpose().array());
  Eigen::MatrixXd out(phi_.rows(), static_cast<Eigen::Index>(which.size()));
  for (std::size_t i = 0; i < which.size(); ++i) {
    if (which[i] < 0 || which[i] > grid.N) throw std::out_of_range("fully_backward: step outside the grid");
    out.col(i) = from_modal({(c * table->row(which[i]).transpose().array()).matrix()});
  }
  return out;
}

Eigen::MatrixXd SpectralSolver1D::fully_forward(const Eigen::Ref<const Eigen::VectorXd>& u0, const TimeGrid& grid,
                                                const std::vector<int>& steps) const {
  const auto table = discrete_table(grid);
  const Eigen::ArrayXd c = to_modal(u0).coefficients.array();
  Eigen::MatrixXd out(phi_.rows(), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out.col(i) = from_modal({(c * table->row(steps[i]).transpose().array()).matrix()});
  }
  return out;
}

}  // namespace subdiff
