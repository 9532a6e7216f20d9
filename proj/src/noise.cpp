#include "subdiff/noise.hpp"

#include <random>
#include <stdexcept>

namespace subdiff {

Eigen::VectorXd make_observation(const Eigen::Ref<const Eigen::VectorXd>& uT, const NoiseSpec& spec) {
  if (!(spec.delta >= 0.0)) throw std::domain_error("make_observation: delta must be >= 0");
  Eigen::VectorXd g = uT;
  if (spec.delta == 0.0 || uT.size() == 0) return g;
  const double scale = spec.delta * uT.cwiseAbs().maxCoeff();
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += scale * normal(gen);
  return g;
}

}  // namespace subdiff
