#pragma once

// Scalar special functions: erfc / erfcx, log-gamma, and the regularized
// lower incomplete gamma function P(a,z) = gamma(a,z)/Gamma(a) with three
// evaluation regimes (power series, continued fraction, and the uniform
// large-a asymptotic of Temme truncated after the c1 coefficient).

#include <cmath>
#include <limits>
#include <stdexcept>

#include "diskstat/common.hpp"

namespace diskstat {

enum class GammaRegime { LowerSeries, UpperContinuedFraction, TemmeUniform };

namespace detail {

// Two-term truncation of the uniform expansion keeps ~1e-12 relative
// accuracy only from here on (measured; the error behaves like
// e^{-a eta^2/2} * c2(eta) / (sqrt(2 pi a) a^2) with c2 ~ 4e-3).
inline constexpr double temme_min_shape = 1e4;
inline constexpr double temme_lambda_lo = 0.25;
inline constexpr double temme_lambda_hi = 4.0;

inline constexpr int max_gamma_iter = 40000;

}  // namespace detail

/// Complementary error function, clamped into the open interval (0,2).
inline double erfc(double x) {
  if (std::isnan(x)) throw std::domain_error("erfc: argument is NaN");
  double v = std::erfc(x);
  if (v <= 0.0) return std::numeric_limits<double>::min();
  if (v >= 2.0) return std::nextafter(2.0, 0.0);
  return v;
}

/// Scaled complementary error function e^{x^2} erfc(x). Used internally to
/// combine erfc with Gaussian factors without underflow. Grows like
/// 2 e^{x^2} for x -> -inf (overflows to +inf below x ~ -26.6).
inline double erfcx(double x) {
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x < 6.0) return std::exp(x * x) * std::erfc(x);
  // Laplace continued fraction, modified Lentz.
  const double tiny = 1e-308;
  double c = 1.0 / tiny;
  double d = 1.0 / x;
  double h = d;
  for (int k = 1; k < 200; ++k) {
    const double ak = 0.5 * k;
    d = x + ak * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + ak / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return h * constants::inv_sqrt_pi;
}

/// ln Gamma(a) for a > 0, Lanczos approximation (g = 7, 9 terms).
inline double ln_gamma(double a) {
  if (!(a > 0.0)) throw std::domain_error("ln_gamma: requires a > 0");
  static constexpr double coeffs[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (a < 0.5) return ln_gamma(a + 1.0) - std::log(a);
  const double z = a - 1.0;
  double s = coeffs[0];
  for (int k = 1; k < 9; ++k) s += coeffs[k] / (z + k);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * constants::pi) + (z + 0.5) * std::log(t) - t + std::log(s);
}

/// eta(lambda) of the uniform asymptotic: eta = sign(lambda-1) *
/// sqrt(2 (lambda - 1 - ln lambda)), with the removable singularity at
/// lambda = 1 handled by a 6-term Taylor expansion.
inline double temme_eta(double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("temme_eta: requires lambda > 0");
  const double d = lambda - 1.0;
  if (std::abs(d) < 1e-3) {
    // eta = d (1 - d/3 + 7d^2/36 - 73d^3/540 + 1331d^4/12960 - 22409d^5/272160 + ...)
    return d * (1.0 + d * (-1.0 / 3.0 + d * (7.0 / 36.0 + d * (-73.0 / 540.0 +
               d * (1331.0 / 12960.0 + d * (-22409.0 / 272160.0))))));
  }
  const double v = 2.0 * (d - std::log1p(d));
  return std::copysign(std::sqrt(v), d);
}

namespace detail {

// c0(eta) = 1/(lambda-1) - 1/eta; Laurent expansion near lambda = 1.
inline double temme_c0(double lambda) {
  const double d = lambda - 1.0;
  if (std::abs(d) < 1e-3) {
    return -1.0 / 3.0 + d * (1.0 / 12.0 + d * (-23.0 / 540.0 +
           d * (353.0 / 12960.0 + d * (-589.0 / 30240.0))));
  }
  return 1.0 / d - 1.0 / temme_eta(lambda);
}

// c1(eta) = 1/eta^3 - 1/(lambda-1)^3 - 1/(lambda-1)^2 - 1/(12(lambda-1)).
// The closed form loses ~1/d^3 * eps absolutely; series-vs-closed error
// crosses over near |d| ~ 6e-3.
inline double temme_c1(double lambda) {
  const double d = lambda - 1.0;
  if (std::abs(d) < 5e-3) {
    return -1.0 / 540.0 + d * (-1.0 / 288.0 + d * (23.0 / 6048.0));
  }
  const double e = temme_eta(lambda);
  return 1.0 / (e * e * e) - 1.0 / (d * d * d) - 1.0 / (d * d) - 1.0 / (12.0 * d);
}

}  // namespace detail

/// Two-term truncation R_a(eta) ~ e^{-a eta^2/2} / sqrt(2 pi a) *
/// (c0(eta) + c1(eta)/a). Truncation error is O(a^{-5/2}) e^{-a eta^2/2}.
inline double temme_R(double a, double lambda) {
  if (!(a > 0.0)) throw std::domain_error("temme_R: requires a > 0");
  if (!(lambda > 0.0)) throw std::domain_error("temme_R: requires lambda > 0");
  const double eta = temme_eta(lambda);
  const double s = detail::temme_c0(lambda) + detail::temme_c1(lambda) / a;
  return std::exp(-0.5 * a * eta * eta) / std::sqrt(2.0 * constants::pi * a) * s;
}

/// P(a, lambda a) through the uniform asymptotic identity
/// P = (1/2) erfc(-eta sqrt(a/2)) - R_a(eta), with the Gaussian factor
/// pulled out of both terms (via erfcx) so the tails do not cancel.
inline double reg_lower_gamma_temme(double a, double z) {
  if (!(a > 0.0)) throw std::domain_error("reg_lower_gamma_temme: requires a > 0");
  if (!(z >= 0.0)) throw std::domain_error("reg_lower_gamma_temme: requires z >= 0");
  if (z == 0.0) return 0.0;
  const double lambda = z / a;
  const double eta = temme_eta(lambda);
  const double x = -eta * std::sqrt(0.5 * a);  // erfc argument; x^2 = a eta^2 / 2
  const double s = (detail::temme_c0(lambda) + detail::temme_c1(lambda) / a) /
                   std::sqrt(2.0 * constants::pi * a);
  double p;
  if (x >= 0.0) {
    p = std::exp(-x * x) * (0.5 * erfcx(x) - s);
  } else {
    p = 1.0 - std::exp(-x * x) * (0.5 * erfcx(-x) + s);
  }
  if (p < 0.0) return 0.0;
  if (p > 1.0) return 1.0;
  return p;
}

/// Regime selection for P(a,z): exactly one regime per (a,z).
inline GammaRegime gamma_regime(double a, double z) {
  if (!(a > 0.0)) throw std::domain_error("gamma_regime: requires a > 0");
  if (!(z >= 0.0)) throw std::domain_error("gamma_regime: requires z >= 0");
  if (a >= detail::temme_min_shape) {
    const double lambda = z / a;
    if (lambda >= detail::temme_lambda_lo && lambda <= detail::temme_lambda_hi) {
      return GammaRegime::TemmeUniform;
    }
  }
  return z < a + 1.0 ? GammaRegime::LowerSeries : GammaRegime::UpperContinuedFraction;
}

namespace detail {

// Lower series: P(a,z) = z^a e^{-z} / Gamma(a+1) * sum_k z^k / ((a+1)...(a+k)).
inline double reg_lower_series(double a, double z) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < max_gamma_iter; ++k) {
    term *= z / (a + k);
    sum += term;
    if (term < sum * 1e-17) {
      const double lp = a * std::log(z) - z - ln_gamma(a);
      return std::exp(lp) * sum;
    }
  }
  throw numerical_error("reg_lower_gamma: series did not converge");
}

// Upper continued fraction (modified Lentz); returns Q(a,z) = 1 - P(a,z).
inline double reg_upper_cf(double a, double z) {
  const double tiny = 1e-308;
  double b = z + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k < max_gamma_iter; ++k) {
    const double ak = -static_cast<double>(k) * (k - a);
    b += 2.0;
    d = ak * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + ak / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) {
      const double lp = a * std::log(z) - z - ln_gamma(a);
      return std::exp(lp) * h;
    }
  }
  throw numerical_error("reg_lower_gamma: continued fraction did not converge");
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a,z) in [0,1], nondecreasing in z.
inline double reg_lower_gamma(double a, double z) {
  switch (gamma_regime(a, z)) {
    case GammaRegime::TemmeUniform:
      return reg_lower_gamma_temme(a, z);
    case GammaRegime::LowerSeries:
      return z == 0.0 ? 0.0 : detail::reg_lower_series(a, z);
    case GammaRegime::UpperContinuedFraction: {
      const double q = detail::reg_upper_cf(a, z);
      return q < 1.0 ? 1.0 - q : 0.0;
    }
  }
  throw numerical_error("reg_lower_gamma: unreachable");
}

}  // namespace diskstat
