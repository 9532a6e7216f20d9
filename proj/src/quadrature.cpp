#include "subdiff/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace subdiff {

namespace {

// Returns (P_n(x), P_n'(x)).
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.points.resize(n, 1);
  rule.weights.resize(n);
  if (n == 1) {
    rule.points(0, 0) = 0.0;
    rule.weights(0) = 2.0;
    return rule;
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points(i, 0) = -x;
    rule.points(n - 1 - i, 0) = x;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.points(n / 2, 0) = 0.0;
  return rule;
}

const QuadratureRule& gauss_legendre_cached(int n) {
  static const auto table = [] {
    std::array<QuadratureRule, 17> t;
    for (int k = 1; k <= 16; ++k) t[k] = gauss_legendre(k);
    return t;
  }();
  if (n < 1 || n > 16) throw std::out_of_range("gauss_legendre_cached: n in [1,16]");
  return table[n];
}

const QuadratureRule& triangle_rule_degree5() {
  static const QuadratureRule rule = [] {
    const double sq = std::sqrt(15.0);
    const double a1 = (6.0 - sq) / 21.0, b1 = (9.0 + 2.0 * sq) / 21.0;
    const double a2 = (6.0 + sq) / 21.0, b2 = (9.0 - 2.0 * sq) / 21.0;
    const double w0 = 9.0 / 80.0;
    const double w1 = (155.0 - sq) / 2400.0;
    const double w2 = (155.0 + sq) / 2400.0;
    QuadratureRule r;
    r.points.resize(7, 2);
    r.weights.resize(7);
    r.points.row(0) << 1.0 / 3.0, 1.0 / 3.0;
    r.points.row(1) << a1, a1;
    r.points.row(2) << b1, a1;
    r.points.row(3) << a1, b1;
    r.points.row(4) << a2, a2;
    r.points.row(5) << b2, a2;
    r.points.row(6) << a2, b2;
    r.weights << w0, w1, w1, w1, w2, w2, w2;
    return r;
  }();
  return rule;
}

QuadratureRule triangle_rule_collapsed(int n) {
  const QuadratureRule g = gauss_legendre(n);
  QuadratureRule r;
  r.points.resize(n * n, 2);
  r.weights.resize(n * n);
  int q = 0;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (g.points(i, 0) + 1.0);
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (g.points(j, 0) + 1.0);
      r.points(q, 0) = u;
      r.points(q, 1) = v * (1.0 - u);
      r.weights(q) = 0.25 * g.weights(i) * g.weights(j) * (1.0 - u);
      ++q;
    }
  }
  return r;
}

}  // namespace subdiff
