#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "subdiff/cq.hpp"
#include "subdiff/fem.hpp"
#include "subdiff/mesh.hpp"
#include "subdiff/mittag_leffler.hpp"
#include "subdiff/spectral.hpp"

using namespace subdiff;

namespace {

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(gen);
  return v;
}

double mnorm(const FemSpace& V, const Eigen::VectorXd& u) { return std::sqrt(u.dot(V.mass() * u)); }

}  // namespace

class Spectral : public ::testing::Test {
 protected:
  static constexpr int K = 15;
  FemSpace V{make_mesh_1d(K)};
  SpectralSolver1D S{V, 0.5, 1.0};
  Eigen::VectorXd phi(int j) const { return S.basis().vector(j); }
  double lambda(int j) const { return S.basis().eigenvalues(j - 1); }
};

TEST_F(Spectral, ModalOfFirstMode) {
  const Eigen::VectorXd c = S.to_modal(phi(1)).coefficients;
  EXPECT_NEAR(c(0), 1.0, 1e-14);
  EXPECT_LT(c.tail(K - 1).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(S.to_modal(Eigen::VectorXd::Zero(K)).coefficients.norm(), 0.0);
  EXPECT_EQ(S.from_modal({Eigen::VectorXd::Zero(K)}).norm(), 0.0);
}

TEST_F(Spectral, RoundTrip) {
  const Eigen::VectorXd v = random_vector(K, 5);
  EXPECT_LE((S.from_modal(S.to_modal(v)) - v).norm(), 1e-12);
}

TEST(SpectralSetup, Rejects2D) {
  const FemSpace V(make_mesh_2d(4));
  EXPECT_THROW(SpectralSolver1D(V, 0.5, 1.0), std::invalid_argument);
}

TEST_F(Spectral, ForwardAtZeroIsIdentity) {
  const Eigen::VectorXd v = random_vector(K, 6);
  EXPECT_LE((S.semi_forward(v, 0.0) - v).norm(), 1e-14 * v.norm());
}

TEST_F(Spectral, ForwardScalesSingleMode) {
  for (int j : {1, 4, 15}) {
    const Eigen::VectorXd u = S.semi_forward(phi(j), 0.7);
    const double factor = ml_eval(0.5, lambda(j) * std::pow(0.7, 0.5));
    EXPECT_LE((u - factor * phi(j)).norm(), 1e-14);
  }
}

TEST_F(Spectral, NearlyExponentialForAlphaCloseToOne) {
  const SpectralSolver1D S1(V, 0.999, 1.0);
  const double t = 0.3;
  const double amp = S1.to_modal(S1.semi_forward(phi(1), t)).coefficients(0);
  EXPECT_NEAR(amp / std::exp(-lambda(1) * t), 1.0, 0.01);
}

TEST_F(Spectral, BackwardInvertsSingleMode) {
  const double gamma = 1e-3;
  const double E1 = ml_eval(0.5, lambda(1));
  const Eigen::VectorXd g = (gamma + E1) * phi(1);
  EXPECT_LE((S.semi_backward(g, gamma, 0.0) - phi(1)).norm(), 1e-12);
  EXPECT_THROW(S.semi_backward(g, 0.0, 0.0), std::domain_error);
  EXPECT_THROW(S.fully_backward(g, -1.0, TimeGrid(1.0, 4)), std::domain_error);
}

TEST_F(Spectral, LargeGammaShrinks) {
  const Eigen::VectorXd g = random_vector(K, 7);
  for (double gamma : {1e2, 1e6}) {
    EXPECT_LE(mnorm(V, S.semi_backward(g, gamma, 0.0)), mnorm(V, g) / gamma);
    EXPECT_LE(mnorm(V, S.semi_backward(g, gamma, 0.5)), mnorm(V, g) / gamma);
  }
}

TEST_F(Spectral, NoiseFreeRoundTripBound) {
  const Eigen::VectorXd u0 = V.l2_project([](double x, double) { return x < 0.5 ? 0.0 : 1.0; });
  const Eigen::VectorXd g = S.semi_forward(u0, 1.0);
  for (double gamma : {1e-2, 1e-4, 1e-6}) {
    const double err = mnorm(V, S.semi_backward(g, gamma, 0.0) - u0) / mnorm(V, u0);
    const double bound = gamma / S.ml_multipliers(1.0).minCoeff();
    EXPECT_LE(err, bound * (1 + 1e-12));
    EXPECT_LE(bound, gamma * (1 + std::tgamma(0.5) * lambda(K)));
  }
}

TEST_F(Spectral, FullySingleStep) {
  const double gamma = 0.01, a = 2.5;
  const TimeGrid g(1.0, 1);
  for (int j : {1, 9}) {
    const Eigen::MatrixXd U = S.fully_backward(a * phi(j), gamma, g);
    ASSERT_EQ(U.cols(), 2);
    const double expected = a / (gamma + 1.0 / (1.0 + lambda(j)));
    EXPECT_NEAR(S.to_modal(U.col(0)).coefficients(j - 1), expected, 1e-12 * expected);
  }
}

TEST_F(Spectral, FullyDenominatorBoundedBelow) {
  const double gamma = 1e-3;
  const TimeGrid g(1.0, 64);
  const auto F = S.discrete_table(g);
  EXPECT_GT(lambda(1), 0.0);
  for (int j = 0; j < K; ++j) EXPECT_GE(gamma + (*F)(g.N, j), gamma);
}

TEST_F(Spectral, FullyApproachesSemidiscrete) {
  const double gamma = 1e-3;
  const Eigen::VectorXd u0 = V.l2_project([](double x, double) { return x * (1 - x); });
  const Eigen::VectorXd g = S.semi_forward(u0, 1.0);
  const Eigen::VectorXd semi = S.semi_backward(g, gamma, 0.0);
  double prev = 0;
  for (int N = 512; N <= 4096; N *= 2) {
    const Eigen::VectorXd fully = S.fully_backward(g, gamma, TimeGrid(1.0, N), {0}).col(0);
    const double err = mnorm(V, fully - semi) / mnorm(V, semi);
    if (N == 4096) EXPECT_LE(err, 5e-3);
    if (N > 512) EXPECT_NEAR(prev / err, 2.0, 0.3) << N;
    prev = err;
  }
}

TEST_F(Spectral, StabilityBoundUniformInLambda) {
  for (double gamma : {1e-2, 1e-4}) {
    const TimeGrid g(1.0, 200);
    const auto F = S.discrete_table(g);
    std::vector<double> C(K, 0.0);
    for (int j = 0; j < K; ++j) {
      for (int n = 1; n <= g.N; ++n) {
        const double amp = (*F)(n, j) / (gamma + (*F)(g.N, j));
        EXPECT_LE(amp, 1.0 / gamma * (1 + 1e-12));
        C[j] = std::max(C[j], amp / std::min(1.0 / gamma, std::pow(g.t(n), -0.5)));
      }
    }
    for (int j = 1; j < K; ++j) EXPECT_LE(C[j], 3 * C[0]);
  }
}

// For t < T the ratio E(t)/(gamma + E(T)) can grow with lambda (at t = 0 it
// always does), so monotone damping holds at the terminal time only.
TEST_F(Spectral, TerminalDampingMonotoneInLambda) {
  for (double gamma : {1e-1, 1e-3, 1e-6}) {
    const TimeGrid g(1.0, 100);
    const auto F = S.discrete_table(g);
    const Eigen::VectorXd E = S.ml_multipliers(1.0);
    for (int j = 1; j < K; ++j) {
      EXPECT_LE(E(j) / (gamma + E(j)), E(j - 1) / (gamma + E(j - 1)) * (1 + 1e-14));
      EXPECT_LE((*F)(g.N, j) / (gamma + (*F)(g.N, j)), (*F)(g.N, j - 1) / (gamma + (*F)(g.N, j - 1)) * (1 + 1e-14));
    }
  }
}

TEST_F(Spectral, IntermediateDampingNotMonotone) {
  const double gamma = 1e-3;
  const Eigen::VectorXd E = S.ml_multipliers(1.0), Et = S.ml_multipliers(0.05);
  bool increase = false;
  for (int j = 1; j < K; ++j) increase |= Et(j) / (gamma + E(j)) > Et(j - 1) / (gamma + E(j - 1));
  EXPECT_TRUE(increase);
}

TEST_F(Spectral, InitialMultiplierGrowsButStaysBelowInverseGamma) {
  const double gamma = 1e-3;
  const Eigen::VectorXd Ec = S.ml_multipliers(1.0);
  for (int j = 1; j < K; ++j) {
    EXPECT_GT(1 / (gamma + Ec(j)), 1 / (gamma + Ec(j - 1)));
    EXPECT_LT(1 / (gamma + Ec(j)), 1 / gamma);
  }
}

TEST_F(Spectral, Linearity) {
  const Eigen::VectorXd v = random_vector(K, 8), w = random_vector(K, 9);
  const double a = 1.7, b = -0.4;
  const Eigen::VectorXd z = a * v + b * w;
  auto check = [&](auto op) { EXPECT_LE((op(z) - a * op(v) - b * op(w)).norm(), 1e-12 * (op(v).norm() + op(w).norm())); };
  check([&](const Eigen::VectorXd& x) { return S.from_modal(S.to_modal(x)); });
  check([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(S.to_modal(x).coefficients); });
  check([&](const Eigen::VectorXd& x) { return S.semi_forward(x, 0.4); });
  check([&](const Eigen::VectorXd& x) { return S.semi_backward(x, 1e-3, 0.2); });
  check([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(S.fully_backward(x, 1e-3, TimeGrid(1.0, 30), {5}).col(0)); });
}

TEST_F(Spectral, NoiseFreeErrorLinearInGamma) {
  const Eigen::VectorXd u0 = phi(1);
  const Eigen::VectorXd g = S.semi_forward(u0, 1.0);
  const double t = 0.5;
  const Eigen::VectorXd exact = S.semi_forward(u0, t);
  std::vector<double> lx, ly;
  for (double gamma : {1e-2, 1e-3, 1e-4, 1e-5}) {
    lx.push_back(std::log(gamma));
    ly.push_back(std::log(mnorm(V, S.semi_backward(g, gamma, t) - exact)));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  EXPECT_NEAR(sxy / sxx, 1.0, 0.05);
}

TEST_F(Spectral, FullyForwardMatchesScalarF) {
  const TimeGrid g(1.0, 40);
  const Eigen::MatrixXd U = S.fully_forward(phi(3), g, {0, 17, 40});
  const Eigen::VectorXd F = scalar_F(0.5, g, lambda(3));
  EXPECT_LE((U.col(1) - F(17) * phi(3)).norm(), 1e-13);
  EXPECT_LE((U.col(2) - F(40) * phi(3)).norm(), 1e-13);
}
