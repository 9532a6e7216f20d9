#include "subdiff/mittag_leffler.hpp"

#include <complex>
#include <numbers>

#include "subdiff/quadrature.hpp"

namespace subdiff {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kContourAngle = 0.75 * kPi;
constexpr double kContourRadius = 1.0;
constexpr double kContourCutoff = 1e-18;
constexpr double kAsymptoticAcceptRel = 1e-15;
constexpr double kAccurateRel = 1e-9;

double log_gamma(double z) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(z, &sign);
#else
  return std::lgamma(z);
#endif
}

void require_finite(const MLArg& a, const char* who) {
  if (!std::isfinite(a.alpha) || !std::isfinite(a.beta) || !std::isfinite(a.x)) {
    throw std::domain_error(std::string(who) + ": non-finite argument");
  }
}

struct SeriesResult {
  double value;
  double error;
};

SeriesResult series_sum(const MLArg& arg, int max_terms) {
  const double x = arg.x;
  double sum = reciprocal_gamma(arg.beta);
  if (x == 0.0) return {sum, 0.0};
  double abs_sum = std::abs(sum);
  double last = abs_sum;
  const double log_x = std::log(x);
  for (int k = 1; k <= max_terms; ++k) {
    const double g = k * arg.alpha + arg.beta;
    double mag = std::pow(x, k) * reciprocal_gamma(g);
    if (!std::isfinite(mag)) mag = std::exp(k * log_x - log_gamma(g));
    const double term = (k % 2 == 0) ? mag : -mag;
    sum += term;
    abs_sum += mag;
    last = mag;
    if (mag < 1e-16 * std::abs(sum)) break;
  }
  return {sum, last + 4.0 * std::numeric_limits<double>::epsilon() * abs_sum};
}

const QuadratureRule& contour_rule(int nodes) {
  static const QuadratureRule r200 = gauss_legendre(200);
  static const QuadratureRule r100 = gauss_legendre(100);
  if (nodes == 200) return r200;
  if (nodes == 100) return r100;
  thread_local QuadratureRule other;
  if (other.size() != nodes) other = gauss_legendre(nodes);
  return other;
}

double contour_sum(double alpha, double x, const QuadratureRule& rule) {
  using cd = std::complex<double>;
  const double theta = kContourAngle;
  const double sigma = kContourRadius;
  const double rmax = std::log(kContourCutoff) / std::cos(theta);
  auto integrand = [&](cd z) { return std::exp(z) * std::pow(z, alpha - 1.0) / (std::pow(z, alpha) + x); };

  double arc = 0.0;
  double ray = 0.0;
  const cd dir = std::polar(1.0, theta);
  for (Eigen::Index q = 0; q < rule.size(); ++q) {
    const double s = rule.points(q, 0);
    const double w = rule.weights(q);
    const double phi = 0.5 * theta * (s + 1.0);
    const cd za = std::polar(sigma, phi);
    arc += w * 0.5 * theta * (integrand(za) * za).real();
    const double rho = sigma + 0.5 * (rmax - sigma) * (s + 1.0);
    ray += w * 0.5 * (rmax - sigma) * (integrand(rho * dir) * dir).imag();
  }
  return (arc + ray) / kPi;
}

}  // namespace

MLArg::MLArg(double a, double b, double xx) : alpha(a), beta(b), x(xx) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(xx)) {
    throw std::domain_error("MLArg: non-finite argument");
  }
  if (!(a > 0.0 && a <= 1.0)) throw std::domain_error("MLArg: alpha must lie in (0,1]");
  if (!(b > 0.0)) throw std::domain_error("MLArg: beta must be > 0");
  if (!(xx >= 0.0)) throw std::domain_error("MLArg: x must be >= 0");
}

std::string to_string(MLRegime r) {
  switch (r) {
    case MLRegime::series: return "series";
    case MLRegime::contour: return "contour";
    case MLRegime::asymptotic: return "asymptotic";
    case MLRegime::exponential: return "exponential";
  }
  return "unknown";
}

double sin_pi(double z) {
  if (z == std::floor(z)) return 0.0;
  const double r = z - 2.0 * std::round(0.5 * z);  // r in [-1, 1]
  return std::sin(kPi * r);
}

double reciprocal_gamma(double z) {
  if (z <= 0.0 && z == std::floor(z)) return 0.0;
  if (z > 0.0) {
    if (z < 170.0) return 1.0 / std::tgamma(z);
    return std::exp(-log_gamma(z));
  }
  // reflection: 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi
  return sin_pi(z) * std::exp(log_gamma(1.0 - z)) / kPi;
}

double ml_series(const MLArg& arg, int max_terms, double max_x) {
  require_finite(arg, "ml_series");
  if (arg.x > max_x) throw std::domain_error("ml_series: x above the cancellation threshold");
  if (max_terms < 0) throw std::invalid_argument("ml_series: max_terms must be >= 0");
  return series_sum(arg, max_terms).value;
}

double ml_asymptotic(const MLArg& arg, int max_terms, double min_x, double* error_estimate) {
  require_finite(arg, "ml_asymptotic");
  if (arg.x < min_x) throw std::domain_error("ml_asymptotic: x below the asymptotic threshold");
  if (arg.x <= 0.0) throw std::domain_error("ml_asymptotic: x must be positive");
  const double log_x = std::log(arg.x);
  double sum = 0.0;
  double prev_env = std::numeric_limits<double>::infinity();
  double omitted = 0.0;
  for (int k = 1; k <= max_terms; ++k) {
    const double z = arg.beta - k * arg.alpha;
    double env, factor;
    if (z >= 1.0) {
      env = std::exp(-log_gamma(z) - k * log_x);
      factor = 1.0;
    } else {
      env = std::exp(log_gamma(1.0 - z) - k * log_x) / kPi;
      factor = sin_pi(z);
    }
    if (k > 1 && env > prev_env) {
      omitted = env;
      break;
    }
    const double term = ((k % 2 == 0) ? -1.0 : 1.0) * env * factor;
    sum += term;
    prev_env = env;
    omitted = env;
    if (env < 1e-17 * std::abs(sum)) break;
  }
  if (error_estimate) *error_estimate = omitted;
  return sum;
}

double ml_contour(const MLArg& arg, int nodes, double* error_estimate) {
  require_finite(arg, "ml_contour");
  if (arg.beta != 1.0) throw std::domain_error("ml_contour: only beta = 1 is supported");
  if (nodes < 2) throw std::invalid_argument("ml_contour: need at least 2 nodes");
  const double v = contour_sum(arg.alpha, arg.x, contour_rule(nodes));
  if (error_estimate) {
    const double coarse = contour_sum(arg.alpha, arg.x, contour_rule(nodes / 2));
    *error_estimate = std::abs(v - coarse) + 16.0 * std::numeric_limits<double>::epsilon() / (1.0 + arg.x);
  }
  return v;
}

MLValue ml_evaluate(const MLArg& arg) {
  MLValue out{};
  if (arg.x <= kSeriesMaxX) {
    const auto s = series_sum(arg, 4000);
    out = {s.value, s.error, MLRegime::series, true};
  } else if (arg.alpha == 1.0 && arg.beta == 1.0) {
    const double v = std::exp(-arg.x);
    out = {v, std::numeric_limits<double>::epsilon() * v, MLRegime::exponential, true};
  } else {
    if (arg.beta != 1.0) {
      throw std::domain_error("ml_eval: beta != 1 is supported only for x <= 1 (series regime)");
    }
    bool done = false;
    if (arg.x >= kAsymptoticMinX) {
      double err = 0.0;
      const double v = ml_asymptotic(arg, 2000, kAsymptoticMinX, &err);
      if (err <= kAsymptoticAcceptRel * std::abs(v)) {
        out = {v, err, MLRegime::asymptotic, true};
        done = true;
      }
    }
    if (!done) {
      double err = 0.0;
      const double v = ml_contour(arg, 200, &err);
      out = {v, err, MLRegime::contour, true};
    }
  }
  out.accurate = out.error_estimate <= kAccurateRel * std::abs(out.value);
  return out;
}

}  // namespace subdiff
