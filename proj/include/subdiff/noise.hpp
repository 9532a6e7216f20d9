#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace subdiff {

/// Relative noise level and generator seed for synthetic observations.
struct NoiseSpec {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

/// g(i) = uT(i) + eps_i * delta * max_i |uT(i)| with eps_i i.i.d. standard
/// normal, drawn per node from a generator seeded by `spec.seed`.
/// delta = 0 returns uT unchanged.
Eigen::VectorXd make_observation(const Eigen::Ref<const Eigen::VectorXd>& uT, const NoiseSpec& spec);

}  // namespace subdiff
