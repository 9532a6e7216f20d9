#pragma once

// Mittag-Leffler function E_{alpha,beta}(-x) on the negative real axis.
//
// Three regimes:
//   x <= 1          alternating power series
//   1 < x < x_asym  Laplace-inversion contour quadrature (beta = 1 only)
//   x >= 10         algebraic large-argument expansion, used only when its
//                   optimal-truncation error estimate is below 1e-15 relative;
//                   otherwise the contour path is used.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace subdiff {

/// Argument of E_{alpha,beta}(-x). Validated at construction.
struct MLArg {
  double alpha;
  double beta;
  double x;

  MLArg(double alpha, double beta, double x);
};

/// Two-sided bounds 1/(1+Gamma(1-a) x) <= E_{a,1}(-x) <= 1/(1+x/Gamma(1+a)).
struct MLBounds {
  double lower;
  double upper;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

enum class MLRegime { series, contour, asymptotic, exponential };

std::string to_string(MLRegime r);

struct MLValue {
  double value;
  double error_estimate;  ///< absolute
  MLRegime regime;
  bool accurate;  ///< relative error estimate <= 1e-9
};

/// Series cutoff above which the alternating sum loses digits.
inline constexpr double kSeriesMaxX = 1.0;
/// Smallest argument at which the large-x expansion is attempted.
inline constexpr double kAsymptoticMinX = 10.0;

/// 1/Gamma(z) for real z; exactly zero at non-positive integers.
double reciprocal_gamma(double z);

/// sin(pi z) with exact zeros at integers.
double sin_pi(double z);

/// Partial sum of sum_k (-x)^k / Gamma(k alpha + beta), stopped when a term
/// falls below 1e-16 |sum| or after `max_terms` terms.
double ml_series(const MLArg& arg, int max_terms = 4000, double max_x = kSeriesMaxX);

/// Large-argument expansion -sum_{k>=1} (-x)^{-k} / Gamma(beta - k alpha),
/// truncated at its smallest term. `error_estimate` (optional) receives the
/// magnitude of the first omitted term.
double ml_asymptotic(const MLArg& arg, int max_terms = 2000, double min_x = kAsymptoticMinX,
                     double* error_estimate = nullptr);

/// E_{alpha,1}(-x) by Gauss-Legendre quadrature of the Laplace inversion
/// integral over the contour {|z| = 1, |arg z| <= 3pi/4} U {r e^{+-3i pi/4}, r >= 1}.
/// Requires beta == 1. `nodes` is the Gauss order on each contour piece.
double ml_contour(const MLArg& arg, int nodes = 200, double* error_estimate = nullptr);

/// Hybrid evaluator with error bookkeeping.
MLValue ml_evaluate(const MLArg& arg);

/// Convenience: value of E_{alpha,beta}(-x).
inline double ml_eval(double alpha, double beta, double x) {
  return ml_evaluate(MLArg(alpha, beta, x)).value;
}

/// Shorthand for E_{alpha,1}(-x).
inline double ml_eval(double alpha, double x) { return ml_eval(alpha, 1.0, x); }

/// Lower and upper sandwich bounds for E_{alpha,1}(-x), alpha in (0,1).
template <typename Scalar = double>
MLBounds ml_bounds(Scalar alpha, Scalar x) {
  if (!(alpha > 0 && alpha < 1)) throw std::domain_error("ml_bounds: alpha must lie in (0,1)");
  if (!(x >= 0) || !std::isfinite(x)) throw std::domain_error("ml_bounds: x must be finite and >= 0");
  using std::tgamma;
  const Scalar lower = Scalar(1) / (Scalar(1) + tgamma(Scalar(1) - alpha) * x);
  const Scalar upper = Scalar(1) / (Scalar(1) + x / tgamma(Scalar(1) + alpha));
  return {static_cast<double>(lower), static_cast<double>(upper)};
}

}  // namespace subdiff
