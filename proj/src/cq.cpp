#include "subdiff/cq.hpp"

#include <algorithm>

namespace subdiff {
namespace {

// brev(N - j) = b_j for j = 1..N, so the history weights of step n are the
// contiguous segment brev.segment(N - n, n).
Eigen::VectorXd reversed_tail(const Eigen::VectorXd& b) {
  const Eigen::Index N = b.size() - 1;
  Eigen::VectorXd r(N);
  for (Eigen::Index j = 1; j <= N; ++j) r(N - j) = b(j);
  return r;
}

}  // namespace

Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> scalar_F_table(
    double alpha, const TimeGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& lambdas) {
  if ((lambdas.array() < 0.0).any()) throw std::domain_error("scalar_F_table: lambda must be >= 0");
  const int N = grid.N;
  const auto w = cq_weights<double>(alpha, N);
  const Eigen::VectorXd s = w.partial_sums();
  const Eigen::VectorXd brev = reversed_tail(w.b);
  const Eigen::ArrayXd denom = 1.0 + lambdas.array() * std::pow(grid.tau(), alpha);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> F(N + 1, lambdas.size());
  F.row(0).setOnes();
  Eigen::VectorXd hist(lambdas.size());
  for (int n = 1; n <= N; ++n) {
    hist.noalias() = F.topRows(n).transpose() * brev.segment(N - n, n);
    F.row(n) = ((s(n) - hist.array()) / denom).transpose();
  }
  return F;
}

std::vector<ResolventExpansion> resolvent_expansions(double alpha, const TimeGrid& grid, const std::vector<int>& steps,
                                                     double tail_tolerance) {
  std::vector<ResolventExpansion> out(steps.size());
  if (steps.empty()) return out;
  const int n_max = *std::max_element(steps.begin(), steps.end());
  if (n_max > grid.N || *std::min_element(steps.begin(), steps.end()) < 0) {
    throw std::out_of_range("resolvent_expansions: step outside the time grid");
  }
  const auto w = cq_weights<double>(alpha, std::max(n_max, 1));
  const Eigen::VectorXd s = w.partial_sums();
  // a_j = -b_j >= 0, stored reversed for contiguous dot products
  Eigen::VectorXd arev(n_max + 1);
  for (int j = 0; j <= n_max; ++j) arev(n_max - j) = (j == 0) ? 0.0 : -w.b(j);

  std::vector<std::vector<double>> coeffs(steps.size());
  std::vector<double> mass(steps.size(), 0.0);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    mass[i] = steps[i] == 0 ? 1.0 : 0.0;
    coeffs[i].assign(1, mass[i]);
  }

  // column k of the table c_k(n); column 1 is S_{n-1}
  Eigen::VectorXd col = Eigen::VectorXd::Zero(n_max + 1);
  col.tail(n_max) = s.head(n_max);
  Eigen::VectorXd next(n_max + 1);
  for (int k = 1; k <= n_max; ++k) {
    bool done = true;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i] == 0) continue;
      const double c = col(steps[i]);
      const double prev = coeffs[i].back();
      coeffs[i].push_back(c);
      mass[i] += c;
      // the mass sum stalls at rounding level, so also stop once the
      // coefficients are past their peak and negligible
      const bool converged = 1.0 - mass[i] <= tail_tolerance || (c < prev && c <= 1e-3 * tail_tolerance);
      if (!converged && k < steps[i]) done = false;
    }
    if (done || k == n_max) break;
    next.setZero();
    for (int n = k + 1; n <= n_max; ++n) {
      const int len = n - k;  // j = 1..n-k, previous column nonzero from index k
      next(n) = col.segment(k, len).dot(arev.segment(n_max - n + k, len));
    }
    col.swap(next);
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out[i].step = steps[i];
    out[i].coefficients = Eigen::Map<const Eigen::VectorXd>(coeffs[i].data(), coeffs[i].size());
  }
  return out;
}

FractionalStepper::FractionalStepper(const FemSpace& space, double alpha, TimeGrid grid)
    : space_(&space),
      alpha_(alpha),
      grid_(grid),
      tau_alpha_(std::pow(grid.tau(), alpha)),
      weights_(cq_weights<double>(alpha, grid.N)) {
  const SparseMatrix step = space.mass() + tau_alpha_ * space.stiffness();
  step_solver_.compute(step);
  if (step_solver_.info() != Eigen::Success) {
    throw std::runtime_error("FractionalStepper: factorization of the step matrix failed");
  }
}

Eigen::MatrixXd FractionalStepper::forward_solve(const Eigen::Ref<const Eigen::VectorXd>& u0,
                                                 const SourceFunction& f) const {
  const int N = grid_.N;
  if (u0.size() != space_->size()) throw std::invalid_argument("forward_solve: initial field has wrong size");
  const Eigen::VectorXd s = weights_.partial_sums();
  const Eigen::VectorXd brev = reversed_tail(weights_.b);
  Eigen::MatrixXd U(u0.size(), N + 1);
  U.col(0) = u0;
  Eigen::VectorXd rhs(u0.size());
  for (int n = 1; n <= N; ++n) {
    rhs.noalias() = s(n) * u0 - U.leftCols(n) * brev.segment(N - n, n);
    if (f) rhs += tau_alpha_ * f(n, grid_.t(n));
    U.col(n) = step_solver_.solve(Eigen::VectorXd(space_->mass() * rhs));
  }
  return U;
}

Eigen::MatrixXd FractionalStepper::resolvent(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return step_solver_.solve(Eigen::MatrixXd(space_->mass() * x));
}

std::shared_ptr<const ResolventExpansion> FractionalStepper::expansion(int step) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = expansions_.find(step);
  if (it != expansions_.end()) return it->second;
  auto e = std::make_shared<const ResolventExpansion>(std::move(resolvent_expansions(alpha_, grid_, {step}).front()));
  expansions_.emplace(step, e);
  return e;
}

std::vector<Eigen::MatrixXd> FractionalStepper::propagate(const Eigen::Ref<const Eigen::MatrixXd>& v,
                                                          const std::vector<int>& steps) const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(steps.size());
  for (int step : steps) {
    const auto e = expansion(step);
    const Eigen::VectorXd& c = e->coefficients;
    const Eigen::Index kmax = c.size() - 1;
    Eigen::MatrixXd y = c(kmax) * v;
    for (Eigen::Index k = kmax - 1; k >= 0; --k) y = c(k) * v + resolvent(y);
    out.push_back(std::move(y));
  }
  return out;
}

Eigen::MatrixXd FractionalStepper::terminal_map_block(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
  return propagate(v, {grid_.N}).front();
}

Eigen::VectorXd FractionalStepper::terminal_map(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return terminal_map_block(v).col(0);
}

}  // namespace subdiff
