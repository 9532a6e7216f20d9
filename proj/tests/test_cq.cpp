#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "subdiff/cq.hpp"
#include "subdiff/fem.hpp"
#include "subdiff/mesh.hpp"
#include "subdiff/mittag_leffler.hpp"

using namespace subdiff;

namespace {

double binomial_oracle(double alpha, int j) {
  // (-1)^j C(alpha, j) = Gamma(j - alpha) / (Gamma(-alpha) Gamma(j + 1))
  return std::exp(std::lgamma(j - alpha) - std::lgamma(j + 1.0)) / std::tgamma(-alpha);
}

double l2(const FemSpace& V, const Eigen::VectorXd& u) { return std::sqrt(u.dot(V.mass() * u)); }

}  // namespace

TEST(TimeGrid, Basics) {
  const TimeGrid g(0.7, 7);
  EXPECT_NEAR(g.tau() * g.N, g.T, 1e-16);
  EXPECT_EQ(g.t(7), 0.7);
  EXPECT_EQ(g.step_at(0.3), 3);
  EXPECT_THROW(g.step_at(0.35), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
  EXPECT_THROW(TimeGrid(-1.0, 4), std::invalid_argument);
}

TEST(Weights, HalfOrderByHand) {
  const auto w = cq_weights(0.5, 3);
  EXPECT_DOUBLE_EQ(w.b(0), 1.0);
  EXPECT_DOUBLE_EQ(w.b(1), -0.5);
  EXPECT_DOUBLE_EQ(w.b(2), -0.125);
  EXPECT_DOUBLE_EQ(w.b(3), -0.0625);
}

TEST(Weights, GammaOracle) {
  const auto w = cq_weights(0.25, 10);
  EXPECT_NEAR(w.b(10), binomial_oracle(0.25, 10), 1e-13);
  for (int j = 1; j <= 10; ++j) EXPECT_NEAR(w.b(j), binomial_oracle(0.25, j), 1e-14 * std::abs(w.b(j)) + 1e-16);
}

TEST(Weights, RejectsAlpha) {
  EXPECT_THROW(cq_weights(0.0, 4), std::domain_error);
  EXPECT_THROW(cq_weights(1.0, 4), std::domain_error);
  EXPECT_THROW(cq_weights(0.5, -1), std::invalid_argument);
}

TEST(Weights, SignsAndPartialSums) {
  for (int a = 1; a <= 9; ++a) {
    const double alpha = 0.1 * a;
    const auto w = cq_weights(alpha, 10000);
    const Eigen::VectorXd s = w.partial_sums();
    EXPECT_EQ(w.b(0), 1.0);
    for (int j = 1; j <= 10000; ++j) {
      ASSERT_LT(w.b(j), 0.0) << alpha << " " << j;
      ASSERT_GT(s(j), 0.0);
      ASSERT_LT(s(j), 1.0);
      ASSERT_LE(s(j), s(j - 1));
    }
  }
}

TEST(ScalarF, ZeroLambda) {
  const Eigen::VectorXd F = scalar_F(0.3, TimeGrid(1.0, 20), 0.0);
  for (int n = 0; n <= 20; ++n) EXPECT_NEAR(F(n), 1.0, 1e-14);
}

TEST(ScalarF, FirstStep) {
  for (double alpha : {0.2, 0.7})
    for (double lambda : {0.5, 40.0}) {
      const TimeGrid g(2.0, 8);
      EXPECT_NEAR(scalar_F(alpha, g, lambda)(1), 1.0 / (1.0 + lambda * std::pow(g.tau(), alpha)), 1e-15);
    }
}

TEST(ScalarF, HandRecurrence) {
  const Eigen::VectorXd F = scalar_F(0.5, TimeGrid(2.0, 2), 1.0);
  EXPECT_DOUBLE_EQ(F(0), 1.0);
  EXPECT_DOUBLE_EQ(F(1), 0.5);
  EXPECT_DOUBLE_EQ(F(2), 0.375);
  EXPECT_THROW(scalar_F(0.5, TimeGrid(1.0, 2), -1.0), std::domain_error);
}

TEST(ScalarF, TableMatchesScalar) {
  Eigen::VectorXd lambdas(4);
  lambdas << 0.0, 1.0, 97.0, 1e5;
  const TimeGrid g(1.0, 50);
  const auto table = scalar_F_table(0.4, g, lambdas);
  for (int m = 0; m < 4; ++m) {
    const Eigen::VectorXd F = scalar_F(0.4, g, lambdas(m));
    for (int n = 0; n <= 50; ++n) EXPECT_NEAR(table(n, m), F(n), 1e-15);
  }
}

TEST(ScalarF, PositiveBoundedNonIncreasing) {
  for (double alpha : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    for (double lambda : {0.0, 1e-3, 1.0, 10.0, 1e3, 1e6}) {
      const Eigen::VectorXd F = scalar_F(alpha, TimeGrid(1.0, 400), lambda);
      for (int n = 1; n <= 400; ++n) {
        ASSERT_GT(F(n), 0.0);
        ASSERT_LE(F(n), 1.0 + 1e-13) << std::abs(F(n) - 1.0);
        ASSERT_LE(F(n), F(n - 1) * (1 + 1e-15));
      }
    }
  }
}

TEST(ScalarF, FirstOrderConvergence) {
  for (double alpha : {0.25, 0.5, 0.75}) {
    for (double lambda : {1.0, 10.0, 100.0}) {
      const double exact = ml_eval(alpha, lambda);
      double prev = 0;
      for (int N = 16; N <= 512; N *= 2) {
        const double err = std::abs(exact - scalar_F(alpha, TimeGrid(1.0, N), lambda)(N));
        if (N > 16) EXPECT_GE(std::log2(prev / err), 0.9) << alpha << " " << lambda << " " << N;
        prev = err;
      }
    }
  }
}

TEST(ScalarF, WeightedErrorConstantUniformInLambda) {
  for (double alpha : {0.25, 0.5, 0.75}) {
    double c1 = 0, cmax = 0;
    for (double lambda : {1.0, 1e2, 1e4}) {
      double c = 0;
      for (int N = 16; N <= 512; N *= 2) {
        const double T = 1.0, tau = T / N;
        const double err = std::abs(ml_eval(alpha, lambda * std::pow(T, alpha)) - scalar_F(alpha, TimeGrid(T, N), lambda)(N));
        c = std::max(c, err / lambda / (tau * std::pow(T, alpha - 1)));
      }
      if (lambda == 1.0) c1 = c;
      cmax = std::max(cmax, c);
    }
    EXPECT_LE(cmax, 3 * c1) << alpha;
  }
}

TEST(Expansion, CoefficientsReproduceScalarF) {
  const TimeGrid g(1.0, 200);
  const std::vector<int> steps{1, 7, 100, 200};
  const auto ex = resolvent_expansions(0.6, g, steps);
  for (double lambda : {0.0, 0.3, 25.0, 4e3}) {
    const Eigen::VectorXd F = scalar_F(0.6, g, lambda);
    const double w = 1.0 / (1.0 + lambda * std::pow(g.tau(), 0.6));
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const Eigen::VectorXd& c = ex[i].coefficients;
      EXPECT_GE(c.minCoeff(), 0.0);
      EXPECT_LE(c.sum(), 1.0 + 1e-13);
      double v = 0;
      for (Eigen::Index k = c.size() - 1; k >= 0; --k) v = c(k) + w * v;
      EXPECT_NEAR(v, F(steps[i]), 1e-13) << lambda << " " << steps[i];
    }
  }
}

class Stepper1D : public ::testing::Test {
 protected:
  static constexpr int K = 31;
  FemSpace V{make_mesh_1d(K)};
  SpectralBasis1D basis = eigenpairs_1d(K);
};

TEST_F(Stepper1D, ZeroData) {
  const FractionalStepper s(V, 0.5, TimeGrid(1.0, 10));
  EXPECT_EQ(s.forward_solve(Eigen::VectorXd::Zero(K)).norm(), 0.0);
  EXPECT_EQ(s.terminal_map(Eigen::VectorXd::Zero(K)).norm(), 0.0);
}

TEST_F(Stepper1D, ModeDecaysLikeScalarF) {
  const TimeGrid g(1.0, 40);
  for (double alpha : {0.25, 0.75}) {
    const FractionalStepper s(V, alpha, g);
    for (int j : {1, 5, 31}) {
      const Eigen::VectorXd v = basis.vector(j);
      const Eigen::MatrixXd U = s.forward_solve(v);
      const Eigen::VectorXd F = scalar_F(alpha, g, basis.eigenvalues(j - 1));
      for (int n = 0; n <= g.N; ++n) EXPECT_LE(l2(V, U.col(n) - F(n) * v), 1e-10) << j << " " << n;
      EXPECT_LE(l2(V, s.terminal_map(v) - F(g.N) * v), 1e-10);
    }
  }
}

TEST_F(Stepper1D, MatchesModalReconstruction) {
  const TimeGrid g(0.5, 64);
  const FractionalStepper s(V, 0.4, g);
  const Eigen::VectorXd u0 = V.l2_project([](double x, double) { return x < 0.3 ? 1.0 : -x; });
  const Eigen::MatrixXd U = s.forward_solve(u0);
  const auto table = scalar_F_table(0.4, g, basis.eigenvalues);
  // the sampled sines are M-orthogonal but not M-normalized
  Eigen::MatrixXd Phi(K, K);
  for (int j = 1; j <= K; ++j) Phi.col(j - 1) = basis.vector(j);
  const Eigen::VectorXd a = (Phi.transpose() * (V.mass() * u0)).cwiseQuotient((Phi.transpose() * V.mass() * Phi).diagonal());
  for (int n : {1, 10, 64}) {
    const Eigen::VectorXd modal = Phi * (table.row(n).transpose().cwiseProduct(a));
    EXPECT_LE(l2(V, U.col(n) - modal), 1e-10);
  }
}

TEST_F(Stepper1D, HalvesWithDoubledSteps) {
  const double alpha = 0.5, lambda = basis.eigenvalues(0);
  const double exact = ml_eval(alpha, lambda);
  const Eigen::VectorXd v = basis.vector(1);
  double prev = 0;
  for (int N = 20; N <= 320; N *= 2) {
    const FractionalStepper s(V, alpha, TimeGrid(1.0, N));
    const double amplitude = v.dot(V.mass() * s.forward_solve(v).col(N)) / v.dot(V.mass() * v);
    const double err = std::abs(amplitude - exact);
    if (N > 20) EXPECT_NEAR(prev / err, 2.0, 0.2) << N;
    prev = err;
  }
}

TEST_F(Stepper1D, TerminalMapLinearAndConsistent) {
  const TimeGrid g(1.0, 300);
  const FractionalStepper s(V, 0.3, g);
  std::mt19937 gen(11);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(K), w(K);
  for (int i = 0; i < K; ++i) v(i) = nd(gen), w(i) = nd(gen);
  const Eigen::VectorXd lhs = s.terminal_map(2.5 * v - 0.75 * w);
  const Eigen::VectorXd rhs = 2.5 * s.terminal_map(v) - 0.75 * s.terminal_map(w);
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
  EXPECT_LE((s.terminal_map(v) - s.forward_solve(v).col(g.N)).norm(), 1e-12 * v.norm());
  const auto snaps = s.propagate(v, {0, 30, 150});
  const Eigen::MatrixXd U = s.forward_solve(v);
  EXPECT_EQ((snaps[0] - v).norm(), 0.0);
  EXPECT_LE((snaps[1] - U.col(30)).norm(), 1e-12 * v.norm());
  EXPECT_LE((snaps[2] - U.col(150)).norm(), 1e-12 * v.norm());
}

TEST_F(Stepper1D, SourceTerm) {
  // constant-in-time source equal to a mode: amplitude solves the scalar scheme with forcing
  const double alpha = 0.5;
  const TimeGrid g(1.0, 16);
  const FractionalStepper s(V, alpha, g);
  const Eigen::VectorXd v = basis.vector(2);
  const double lambda = basis.eigenvalues(1);
  const Eigen::MatrixXd U = s.forward_solve(Eigen::VectorXd::Zero(K), [&](int, double) { return v; });
  const auto w = cq_weights(alpha, g.N);
  const double ta = std::pow(g.tau(), alpha);
  std::vector<double> a(g.N + 1, 0.0);
  for (int n = 1; n <= g.N; ++n) {
    double hist = 0;
    for (int j = 1; j <= n; ++j) hist += w.b(j) * a[n - j];
    a[n] = (ta - hist) / (1 + lambda * ta);
    EXPECT_LE(l2(V, U.col(n) - a[n] * v), 1e-12);
  }
}

TEST(Stepper2D, MatchesForwardSolve) {
  const FemSpace V(make_mesh_2d(8));
  const FractionalStepper s(V, 0.75, TimeGrid(1.0, 50));
  const Eigen::VectorXd v = V.l2_project([](double x, double y) { return x * (1 - x) * y * (1 - y); });
  EXPECT_LE((s.terminal_map(v) - s.forward_solve(v).col(50)).norm(), 1e-12 * v.norm());
}
