#include "subdiff/qbv.hpp"

#include <cmath>

namespace subdiff {

QBVProblem::QBVProblem(const FractionalStepper& s, double gamma_, Eigen::VectorXd obs)
    : stepper(&s), gamma(gamma_), observation(std::move(obs)) {
  if (!(gamma_ > 0.0)) throw std::domain_error("QBVProblem: gamma must be > 0");
  if (observation.size() != s.space().size()) throw std::invalid_argument("QBVProblem: observation has wrong size");
}

Eigen::MatrixXd qbv_operator_apply(const FractionalStepper& stepper, double gamma,
                                   const Eigen::Ref<const Eigen::MatrixXd>& v) {
  return gamma * v + stepper.terminal_map_block(v);
}

Eigen::VectorXd qbv_operator_apply(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& v) {
  return qbv_operator_apply(*p.stepper, p.gamma, Eigen::MatrixXd(v)).col(0);
}

CGSolution solve_initial_block(const FractionalStepper& stepper, double gamma,
                               const Eigen::Ref<const Eigen::MatrixXd>& observations, const CGConfig& cfg) {
  if (!(gamma > 0.0)) throw std::domain_error("solve_initial: gamma must be > 0");
  if (!(cfg.rel_tolerance > 0.0 && cfg.rel_tolerance < 1.0)) {
    throw std::invalid_argument("solve_initial: tolerance must lie in (0,1)");
  }
  const SparseMatrix& M = stepper.space().mass();
  const Eigen::Index n = observations.rows(), cols = observations.cols();
  const int limit = cfg.iteration_limit(static_cast<int>(n));

  CGSolution out;
  out.values = Eigen::MatrixXd::Zero(n, cols);
  out.iterations.assign(cols, 0);
  out.residuals.assign(cols, 0.0);

  Eigen::MatrixXd R = observations, P = observations;
  std::vector<double> rr(cols), bnorm(cols);
  std::vector<Eigen::Index> active;
  for (Eigen::Index c = 0; c < cols; ++c) {
    rr[c] = R.col(c).dot(M * R.col(c));
    bnorm[c] = std::sqrt(rr[c]);
    if (bnorm[c] > 0.0) active.push_back(c);
  }

  for (int it = 1; it <= limit && !active.empty(); ++it) {
    Eigen::MatrixXd Pa(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) Pa.col(a) = P.col(active[a]);
    const Eigen::MatrixXd Q = qbv_operator_apply(stepper, gamma, Pa);
    const Eigen::MatrixXd MQ = M * Q;
    std::vector<Eigen::Index> still;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index c = active[a];
      const double step = rr[c] / Pa.col(a).dot(MQ.col(a));
      out.values.col(c) += step * Pa.col(a);
      R.col(c) -= step * Q.col(a);
      const double rr_new = R.col(c).dot(M * R.col(c));
      out.iterations[c] = it;
      out.residuals[c] = std::sqrt(rr_new) / bnorm[c];
      if (out.residuals[c] <= cfg.rel_tolerance) continue;
      P.col(c) = R.col(c) + (rr_new / rr[c]) * P.col(c);
      rr[c] = rr_new;
      still.push_back(c);
    }
    active.swap(still);
  }
  if (!active.empty()) {
    const Eigen::Index c = active.front();
    throw ConvergenceError(out.iterations[c], out.residuals[c]);
  }
  return out;
}

Eigen::VectorXd solve_initial(const QBVProblem& p, const CGConfig& cfg, CGSolution* info) {
  CGSolution s = solve_initial_block(*p.stepper, p.gamma, p.observation, cfg);
  Eigen::VectorXd u0 = s.values.col(0);
  if (info) *info = std::move(s);
  return u0;
}

namespace {

double terminal_residual(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& u0,
                         const Eigen::Ref<const Eigen::VectorXd>& uN) {
  const FemSpace& space = p.space();
  const double gnorm = space.norm(p.observation);
  const Eigen::VectorXd r = p.gamma * u0 + uN - p.observation;
  return gnorm > 0.0 ? space.norm(r) / gnorm : space.norm(r);
}

}  // namespace

Trajectory reconstruct_trajectory(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& u0,
                                  const CGConfig& cfg) {
  Trajectory t;
  t.states = p.stepper->forward_solve(u0);
  t.terminal_residual = terminal_residual(p, u0, t.states.col(t.states.cols() - 1));
  t.consistent = t.terminal_residual <= 10.0 * cfg.rel_tolerance;
  return t;
}

Trajectory reconstruct_snapshots(const QBVProblem& p, const Eigen::Ref<const Eigen::VectorXd>& u0,
                                 const std::vector<int>& steps, const CGConfig& cfg) {
  std::vector<int> all = steps;
  all.push_back(p.stepper->grid().N);
  const auto cols = p.stepper->propagate(Eigen::MatrixXd(u0), all);
  Trajectory t;
  t.states.resize(u0.size(), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) t.states.col(i) = cols[i].col(0);
  t.terminal_residual = terminal_residual(p, u0, cols.back().col(0));
  t.consistent = t.terminal_residual <= 10.0 * cfg.rel_tolerance;
  return t;
}

Eigen::VectorXd source_reduction(const FractionalStepper& stepper, const Eigen::Ref<const Eigen::VectorXd>& g,
                                 const SourceFunction& f) {
  if (!f) return g;
  const Eigen::MatrixXd Z = stepper.forward_solve(Eigen::VectorXd::Zero(g.size()), f);
  return g - Z.col(Z.cols() - 1);
}

}  // namespace subdiff
