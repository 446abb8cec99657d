#pragma once

// Four-term large-n expansions of the log moment generating function for
// merging radii (bulk and edge), the closed-form cumulant coefficient
// functions, and the limiting CLT covariance matrix. All infinite
// integrals are truncated at max|s| + margin (Gaussian tails) and
// evaluated by adaptive Gauss-Kronrod quadrature split at the offsets.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "diskstat/common.hpp"
#include "diskstat/ensemble.hpp"
#include "diskstat/finite_difference.hpp"
#include "diskstat/quadrature.hpp"
#include "diskstat/special_functions.hpp"

namespace diskstat {

namespace detail {

inline void validate_us(std::span<const double> u, std::span<const double> s) {
  require(u.size() == s.size(), "fugacity count must match offset count");
  require(!s.empty(), "offsets must be nonempty");
  require(all_finite(u), "Fugacities must be finite");
  require(all_finite(s), "offsets must be finite");
  require(strictly_increasing(s), "offsets must be strictly increasing");
}

// jump factor (e^{u_l}-1) e^{u_{l+1}+...+u_m}, same weights as omega_l
inline std::vector<double> suffix_jump_weights(std::span<const double> u) {
  const std::size_t m = u.size();
  std::vector<double> w(m);
  double tail = 0.0;
  for (std::size_t l = m; l-- > 0;) {
    w[l] = std::exp(tail) * std::expm1(u[l]);
    tail += u[l];
  }
  return w;
}

// prefix factor (e^{-u_l}-1) e^{-(u_1+...+u_{l-1})}
inline std::vector<double> prefix_jump_weights(std::span<const double> u) {
  const std::size_t m = u.size();
  std::vector<double> w(m);
  double head = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    w[l] = std::exp(-head) * std::expm1(-u[l]);
    head += u[l];
  }
  return w;
}

}  // namespace detail

/// H1(t) = 1 + sum_l ((e^{u_l}-1)/2) e^{u_{l+1}+...+u_m} erfc(t - s_l); > 0.
inline double H1(double t, std::span<const double> u, std::span<const double> s) {
  detail::validate_us(u, s);
  const auto w = detail::suffix_jump_weights(u);
  KahanSum acc;
  for (std::size_t l = 0; l < u.size(); ++l) acc.add(0.5 * w[l] * erfc(t - s[l]));
  return 1.0 + acc.value();
}

/// H2(t) = 1 + sum_l ((e^{-u_l}-1)/2) e^{-(u_1+...+u_{l-1})} erfc(t + s_l); > 0.
inline double H2(double t, std::span<const double> u, std::span<const double> s) {
  detail::validate_us(u, s);
  const auto w = detail::prefix_jump_weights(u);
  KahanSum acc;
  for (std::size_t l = 0; l < u.size(); ++l) acc.add(0.5 * w[l] * erfc(t + s[l]));
  return 1.0 + acc.value();
}

namespace detail {

// ln H via log1p of (H - 1); the C2 integrands vanish at infinity where
// ln(1 + eps) would lose all digits.
inline double ln_h(double t, std::span<const double> w, std::span<const double> s,
                   double sign_s) {
  double hm1 = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    hm1 += 0.5 * w[l] * erfc(t + sign_s * s[l]);
  }
  return std::log1p(hm1);
}

inline double h_of(double t, std::span<const double> w, std::span<const double> s,
                   double sign_s) {
  double hm1 = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    hm1 += 0.5 * w[l] * erfc(t + sign_s * s[l]);
  }
  return 1.0 + hm1;
}

inline double g1_of(double t, std::span<const double> w1, std::span<const double> s) {
  double num = 0.0;
  for (std::size_t l = 0; l < w1.size(); ++l) {
    const double x = t - s[l];
    const double q = (1.0 - 2.0 * s[l] * s[l] + t * s[l] - 5.0 * t * t) / 3.0;
    num += w1[l] * std::exp(-x * x) * constants::inv_sqrt_2pi * q;
  }
  return num / h_of(t, w1, s, -1.0);
}

inline double g2_of(double t, std::span<const double> w1, std::span<const double> s) {
  double num = 0.0;
  for (std::size_t l = 0; l < w1.size(); ++l) {
    const double sl = s[l];
    const double x = t - sl;
    const double s2 = sl * sl;
    const double poly = 50.0 * std::pow(t, 5) - 70.0 * std::pow(t, 4) * sl -
                        std::pow(t, 3) * (73.0 - 62.0 * s2) +
                        t * t * sl * (33.0 - 50.0 * s2) -
                        t * (3.0 + 18.0 * s2 - 16.0 * s2 * s2) -
                        sl * (3.0 - 22.0 * s2 + 8.0 * s2 * s2);
    num += w1[l] * std::exp(-x * x) / (18.0 * constants::sqrt_2pi) * poly;
  }
  return num / h_of(t, w1, s, -1.0);
}

// H2'(t) in closed form: d/dt erfc(t+s) = -(2/sqrt(pi)) e^{-(t+s)^2}.
inline double h2_prime_of(double t, std::span<const double> w2, std::span<const double> s) {
  double d = 0.0;
  for (std::size_t l = 0; l < w2.size(); ++l) {
    const double x = t + s[l];
    d -= w2[l] * std::exp(-x * x) * constants::inv_sqrt_pi;
  }
  return d;
}

inline std::vector<double> offsets_in(std::span<const double> s, double lo, double hi) {
  std::vector<double> pts;
  for (double v : s) {
    if (v > lo && v < hi) pts.push_back(v);
    if (-v > lo && -v < hi) pts.push_back(-v);
  }
  return pts;
}

inline double truncation_T(std::span<const double> s, const QuadratureSpec& spec) {
  double mx = 0.0;
  for (double v : s) mx = std::max(mx, std::abs(v));
  return mx + spec.truncation_margin;
}

inline QuadResult must_converge(const QuadResult& r, const char* what, const char* whom) {
  if (!r.converged) {
    throw numerical_error(std::string(whom) + ": integral " + what +
                          " did not converge to tolerance");
  }
  return r;
}

}  // namespace detail

/// G1(t): Gaussian-weighted quadratic correction, normalized by H1.
inline double G1(double t, std::span<const double> u, std::span<const double> s) {
  detail::validate_us(u, s);
  return detail::g1_of(t, detail::suffix_jump_weights(u), s);
}

/// G2(t): Gaussian-weighted degree-5 correction, normalized by H1.
inline double G2(double t, std::span<const double> u, std::span<const double> s) {
  detail::validate_us(u, s);
  return detail::g2_of(t, detail::suffix_jump_weights(u), s);
}

struct ExpansionCoeffs {
  std::array<double, 4> c{};    // C1, C2, C3, C4
  std::array<double, 4> err{};  // propagated quadrature error estimates
  Regime regime = Regime::Bulk;
};

/// Bulk expansion coefficients of ln E = C1 n + C2 sqrt(n) + C3 + C4/sqrt(n) + o(1).
inline ExpansionCoeffs bulk_coeffs(double b, double alpha, double r,
                                   std::span<const double> s, std::span<const double> u,
                                   const QuadratureSpec& spec = {}) {
  require(b > 0.0, "b must be > 0");
  require(alpha > -1.0, "alpha must be > -1");
  require(r > 0.0 && r < std::pow(b, -1.0 / (2.0 * b)),
          "base radius must lie in (0, b^{-1/(2b)})");
  detail::validate_us(u, s);
  spec.validate();

  const auto w1 = detail::suffix_jump_weights(u);
  const auto w2 = detail::prefix_jump_weights(u);
  const double T = detail::truncation_T(s, spec);
  const auto breaks = detail::offsets_in(s, -T, T);
  const double rb = std::pow(r, b);
  double usum = 0.0;
  for (double v : u) usum += v;

  auto lnH1 = [&](double t) { return detail::ln_h(t, w1, s, -1.0); };
  auto lnH2 = [&](double t) { return detail::ln_h(t, w2, s, +1.0); };
  auto g1 = [&](double t) { return detail::g1_of(t, w1, s); };
  auto g2 = [&](double t) { return detail::g2_of(t, w1, s); };

  const QuadResult i_sum = detail::must_converge(
      integrate_split([&](double t) { return lnH1(t) + lnH2(t); }, 0.0, T, breaks, spec),
      "int_0^inf (ln H1 + ln H2)", "bulk_coeffs");
  const QuadResult i_diff = detail::must_converge(
      integrate_split([&](double t) { return t * (lnH1(t) - lnH2(t)); }, 0.0, T, breaks, spec),
      "int_0^inf t (ln H1 - ln H2)", "bulk_coeffs");
  const QuadResult i_g1 = detail::must_converge(
      integrate_split(g1, -T, T, breaks, spec), "int_R G1", "bulk_coeffs");
  const QuadResult i_t2 = detail::must_converge(
      integrate_split([&](double t) { return t * t * (lnH1(t) + lnH2(t)); }, 0.0, T, breaks,
                      spec),
      "int_0^inf t^2 (ln H1 + ln H2)", "bulk_coeffs");
  const QuadResult i_g = detail::must_converge(
      integrate_split(
          [&](double t) {
            const double v = g1(t);
            return 4.0 * t * v - v * v / constants::sqrt_2 + g2(t);
          },
          -T, T, breaks, spec),
      "int_R (4t G1 - G1^2/sqrt(2) + G2)", "bulk_coeffs");

  ExpansionCoeffs out;
  out.regime = Regime::Bulk;
  out.c[0] = b * std::pow(r, 2.0 * b) * usum;
  out.c[1] = constants::sqrt_2 * b * rb * i_sum.value;
  out.c[2] = -(0.5 + alpha) * usum + 4.0 * b * i_diff.value +
             constants::sqrt_2 * b * i_g1.value;
  out.c[3] = 6.0 * constants::sqrt_2 * b / rb * i_t2.value + b / rb * i_g.value;
  out.err[0] = 0.0;
  out.err[1] = constants::sqrt_2 * b * rb * i_sum.error;
  out.err[2] = 4.0 * b * i_diff.error + constants::sqrt_2 * b * i_g1.error;
  out.err[3] = 6.0 * constants::sqrt_2 * b / rb * i_t2.error + b / rb * i_g.error;
  return out;
}

/// Edge expansion coefficients, including the H2'(0)/H2(0) and G1(0) terms.
inline ExpansionCoeffs edge_coeffs(double b, double alpha, std::span<const double> s,
                                   std::span<const double> u,
                                   const QuadratureSpec& spec = {}) {
  require(b > 0.0, "b must be > 0");
  require(alpha > -1.0, "alpha must be > -1");
  detail::validate_us(u, s);
  spec.validate();

  const auto w1 = detail::suffix_jump_weights(u);
  const auto w2 = detail::prefix_jump_weights(u);
  const double T = detail::truncation_T(s, spec);
  const auto breaks = detail::offsets_in(s, -T, T);
  double usum = 0.0;
  for (double v : u) usum += v;

  auto lnH2 = [&](double t) { return detail::ln_h(t, w2, s, +1.0); };
  auto g1 = [&](double t) { return detail::g1_of(t, w1, s); };
  auto g2 = [&](double t) { return detail::g2_of(t, w1, s); };

  const QuadResult i_ln = detail::must_converge(
      integrate_split(lnH2, 0.0, T, breaks, spec), "int_0^inf ln H2", "edge_coeffs");
  const QuadResult i_tln = detail::must_converge(
      integrate_split([&](double t) { return t * lnH2(t); }, 0.0, T, breaks, spec),
      "int_0^inf t ln H2", "edge_coeffs");
  const QuadResult i_g1 = detail::must_converge(
      integrate_split(g1, -T, 0.0, breaks, spec), "int_{-inf}^0 G1", "edge_coeffs");
  const QuadResult i_t2ln = detail::must_converge(
      integrate_split([&](double t) { return t * t * lnH2(t); }, 0.0, T, breaks, spec),
      "int_0^inf t^2 ln H2", "edge_coeffs");
  const QuadResult i_g = detail::must_converge(
      integrate_split(
          [&](double t) {
            const double v = g1(t);
            return 4.0 * t * v - v * v / constants::sqrt_2 + g2(t);
          },
          -T, 0.0, breaks, spec),
      "int_{-inf}^0 (4t G1 - G1^2/sqrt(2) + G2)", "edge_coeffs");

  const double sqrt_b = std::sqrt(b);
  const double b32 = b * sqrt_b;
  const double h2_zero = detail::h_of(0.0, w2, s, +1.0);
  const double h2p_zero = detail::h2_prime_of(0.0, w2, s);
  const double g1_zero = detail::g1_of(0.0, w1, s);

  ExpansionCoeffs out;
  out.regime = Regime::Edge;
  out.c[0] = usum;
  out.c[1] = std::sqrt(2.0 * b) * i_ln.value;
  out.c[2] = (0.5 + alpha) * std::log(h2_zero) - 4.0 * b * i_tln.value +
             constants::sqrt_2 * b * i_g1.value;
  out.c[3] = 6.0 * constants::sqrt_2 * b32 * i_t2ln.value + b32 * i_g.value -
             (1.0 + 6.0 * alpha + 6.0 * alpha * alpha) / (12.0 * std::sqrt(2.0 * b)) *
                 h2p_zero / h2_zero +
             (0.5 + alpha) * sqrt_b * g1_zero;
  out.err[0] = 0.0;
  out.err[1] = std::sqrt(2.0 * b) * i_ln.error;
  out.err[2] = 4.0 * b * i_tln.error + constants::sqrt_2 * b * i_g1.error;
  out.err[3] = 6.0 * constants::sqrt_2 * b32 * i_t2ln.error + b32 * i_g.error;
  return out;
}

/// Coefficients for one regime/configuration, dispatching on cfg.regime.
inline ExpansionCoeffs expansion_coeffs(double b, double alpha, const MergeConfig& cfg,
                                        std::span<const double> u,
                                        const QuadratureSpec& spec = {}) {
  if (cfg.regime == Regime::Bulk) {
    return bulk_coeffs(b, alpha, cfg.base_radius, cfg.offsets, u, spec);
  }
  return edge_coeffs(b, alpha, cfg.offsets, u, spec);
}

/// Predicted ln E at size n from the four coefficients.
inline double eval_expansion(const ExpansionCoeffs& e, double n) {
  const double sn = std::sqrt(n);
  return e.c[0] * n + e.c[1] * sn + e.c[2] + e.c[3] / sn;
}

/// u-derivatives (d^{jvec} C_k)|_{u=0}, k = 1..4, by the module's finite
/// difference schedule. Orders above 4 are rejected.
inline std::array<FdResult, 4> cumulant_asymptotics(double b, double alpha,
                                                    const MergeConfig& cfg,
                                                    std::span<const int> jvec,
                                                    const QuadratureSpec& spec = {}) {
  int total = 0;
  for (int j : jvec) {
    require(j >= 0, "cumulant_asymptotics: negative order");
    total += j;
  }
  require(total >= 1, "cumulant_asymptotics: |jvec| must be >= 1");
  require(total <= 4, "cumulant_asymptotics: orders above 4 are not supported");
  require(jvec.size() == cfg.offsets.size(), "jvec length must match offset count");

  // the four FD runs hit identical stencil points; memoize the quadratures
  std::map<std::vector<double>, ExpansionCoeffs> memo;
  auto coeffs_at = [&](std::span<const double> u) -> const ExpansionCoeffs& {
    std::vector<double> key(u.begin(), u.end());
    auto it = memo.find(key);
    if (it == memo.end()) {
      it = memo.emplace(std::move(key), expansion_coeffs(b, alpha, cfg, u, spec)).first;
    }
    return it->second;
  };

  std::array<FdResult, 4> out;
  for (int k = 0; k < 4; ++k) {
    out[k] = central_derivative(
        [&](std::span<const double> u) { return coeffs_at(u).c[k]; }, jvec,
        fd_step_for_order(total), 3);
  }
  return out;
}

/// One cumulant's expansion kappa ~ a n + b sqrt(n) + c + d/sqrt(n).
struct MomentExpansion {
  double n_coef = 0.0;
  double sqrtn_coef = 0.0;
  double const_coef = 0.0;
  double invsqrtn_coef = 0.0;

  double eval(double n) const {
    const double sn = std::sqrt(n);
    return n_coef * n + sqrtn_coef * sn + const_coef + invsqrtn_coef / sn;
  }
};

namespace edge_cf {

// closed-form edge coefficient functions of the offset
inline double c1(double b, double s) {
  return std::sqrt(b) * s / constants::sqrt_2 * erfc(s) -
         std::sqrt(b) * constants::inv_sqrt_2pi * std::exp(-s * s);
}
inline double d1(double b, double alpha, double s) {
  return -0.5 * (0.5 + alpha - 0.5 * b) * erfc(s) -
         b * s / (3.0 * constants::sqrt_pi) * std::exp(-s * s);
}
inline double e1(double b, double alpha, double s) {
  const double s2 = s * s;
  return std::exp(-s2) * constants::inv_sqrt_2pi *
         ((b * (2.0 + 4.0 * alpha) - 1.0 - 6.0 * alpha - 6.0 * alpha * alpha) /
              (12.0 * std::sqrt(b)) +
          (3.0 * b - 2.0 - 4.0 * alpha) * s2 / 6.0 * std::sqrt(b) -
          2.0 * s2 * s2 / 9.0 * b * std::sqrt(b));
}
inline double c2(double b, double s) {
  const double sb = std::sqrt(b);
  return sb / (2.0 * constants::sqrt_pi) * erfc(constants::sqrt_2 * s) +
         sb * std::exp(-s * s) * constants::inv_sqrt_2pi * (1.0 - erfc(s)) +
         sb * s / constants::sqrt_2 * erfc(s) * (0.5 * erfc(s) - 1.0);
}
inline double d2(double b, double alpha, double s) {
  return -b / (12.0 * constants::pi) * std::exp(-2.0 * s * s) +
         b * s / (2.0 * constants::sqrt_2pi) * erfc(constants::sqrt_2 * s) +
         b * s / (3.0 * constants::sqrt_pi) * std::exp(-s * s) * (1.0 - erfc(s)) +
         (b - 1.0 - 2.0 * alpha) / 4.0 * erfc(s) * (0.5 * erfc(s) - 1.0);
}
inline double e2(double b, double alpha, double s) {
  const double s2 = s * s;
  const double sb = std::sqrt(b);
  return std::exp(-s2) / (12.0 * constants::sqrt_2pi * sb) *
             (1.0 - 2.0 * b + 6.0 * alpha - 4.0 * b * alpha + 6.0 * alpha * alpha +
              2.0 * (2.0 - 3.0 * b + 4.0 * alpha) * b * s2 + 8.0 * b * b / 3.0 * s2 * s2) *
             (1.0 - erfc(s)) -
         b * sb * s / (72.0 * constants::sqrt_2 * constants::pi) * std::exp(-2.0 * s2) -
         b * sb * (1.0 + 4.0 * s2) / (32.0 * constants::sqrt_pi) *
             erfc(constants::sqrt_2 * s);
}

}  // namespace edge_cf

namespace detail {

// p(t,s): quintic weight in the n^{-1/2} covariance coefficient
inline double p_quintic(double t, double s) {
  const double s2 = s * s;
  return -3.0 * s + 22.0 * s2 * s - 8.0 * s2 * s2 * s +
         t * (21.0 - 66.0 * s2 + 16.0 * s2 * s2) + t * t * (57.0 * s - 50.0 * s2 * s) +
         t * t * t * (-193.0 + 62.0 * s2) - 70.0 * std::pow(t, 4) * s +
         50.0 * std::pow(t, 5);
}

// symmetric quartic appearing in both covariance e-coefficients
inline double cov_quartic(double sl, double sk) {
  const double sl2 = sl * sl, sk2 = sk * sk;
  return 51.0 + 55.0 * sl2 * sl2 + 55.0 * sk2 * sk2 + 96.0 * sl2 + 96.0 * sk2 +
         128.0 * sl2 * sl * sk + 128.0 * sl * sk2 * sk + 180.0 * sl * sk +
         210.0 * sl2 * sk2;
}

// integrand of the d_{(1,1)} two-sided Gaussian piece (shared bulk/edge)
inline double d11_gauss_integrand(double t, double sl, double sk) {
  const double xl = t - sl, xk = t - sk;
  const double ql = (1.0 - 5.0 * t * t + t * sl - 2.0 * sl * sl) / 3.0;
  const double qk = (1.0 - 5.0 * t * t + t * sk - 2.0 * sk * sk) / 3.0;
  return (2.0 - erfc(t - sk)) * std::exp(-xl * xl) / (2.0 * constants::sqrt_pi) * ql -
         erfc(t - sl) * std::exp(-xk * xk) / (2.0 * constants::sqrt_pi) * qk;
}

inline double e11_p_integrand(double t, double sl, double sk) {
  const double xl = t - sl, xk = t - sk;
  return (2.0 - erfc(t - sk)) * std::exp(-xl * xl) * p_quintic(t, sl) -
         erfc(t - sl) * std::exp(-xk * xk) * p_quintic(t, sk);
}

}  // namespace detail

/// Closed-form coefficient functions of the cumulant expansions: mean,
/// variance and covariance coefficients for one regime/configuration.
/// One-dimensional integrals are evaluated on construction-free calls.
class ClosedFormMoments {
 public:
  ClosedFormMoments(double b, double alpha, MergeConfig cfg, QuadratureSpec spec = {})
      : b_(b), alpha_(alpha), cfg_(std::move(cfg)), spec_(spec) {
    require(b_ > 0.0, "b must be > 0");
    require(alpha_ > -1.0, "alpha must be > -1");
    require(all_finite(cfg_.offsets), "offsets must be finite");
    require(strictly_increasing(cfg_.offsets), "offsets must be strictly increasing");
    spec_.validate();
    if (cfg_.regime == Regime::Bulk) {
      require(cfg_.base_radius > 0.0 &&
                  cfg_.base_radius < std::pow(b_, -1.0 / (2.0 * b_)),
              "base radius must lie in (0, b^{-1/(2b)})");
    }
  }

  std::size_t m() const { return cfg_.offsets.size(); }
  Regime regime() const { return cfg_.regime; }

  MomentExpansion mean(std::size_t l) const {
    const double s = offset(l);
    MomentExpansion e;
    if (cfg_.regime == Regime::Bulk) {
      const double r = cfg_.base_radius;
      e.n_coef = b_ * std::pow(r, 2.0 * b_);
      e.sqrtn_coef = constants::sqrt_2 * b_ * std::pow(r, b_) * s;
      e.const_coef = (b_ - 1.0 - 2.0 * alpha_) / 2.0;
      e.invsqrtn_coef = 0.0;
    } else {
      e.n_coef = 1.0;
      e.sqrtn_coef = edge_cf::c1(b_, s);
      e.const_coef = edge_cf::d1(b_, alpha_, s);
      e.invsqrtn_coef = edge_cf::e1(b_, alpha_, s);
    }
    return e;
  }

  MomentExpansion variance(std::size_t l) const {
    const double s = offset(l);
    MomentExpansion e;
    if (cfg_.regime == Regime::Bulk) {
      const double rb = std::pow(cfg_.base_radius, b_);
      e.sqrtn_coef = b_ * rb / constants::sqrt_pi;
      e.const_coef = b_ * s * constants::inv_sqrt_2pi;
      e.invsqrtn_coef = -b_ * (1.0 + 4.0 * s * s) / (16.0 * constants::sqrt_pi * rb);
    } else {
      e.sqrtn_coef = edge_cf::c2(b_, s);
      e.const_coef = edge_cf::d2(b_, alpha_, s);
      e.invsqrtn_coef = edge_cf::e2(b_, alpha_, s);
    }
    return e;
  }

  MomentExpansion covariance(std::size_t l, std::size_t k) const {
    require(l < k, "covariance: requires l < k");
    const double sl = offset(l);
    const double sk = offset(k);
    MomentExpansion e;
    e.sqrtn_coef = c11(sl, sk);
    e.const_coef = d11(sl, sk);
    e.invsqrtn_coef = e11(sl, sk);
    return e;
  }

  /// sqrt(n)-coefficient of the covariance; bulk uses the two-sided erfc
  /// integral, edge the one-sided one.
  double c11(double sl, double sk) const {
    const double T = trunc_T(sl, sk);
    if (cfg_.regime == Regime::Bulk) {
      auto f = [&](double t) {
        return erfc(t - sl) * (1.0 - 0.5 * erfc(t - sk)) +
               erfc(t + sk) * (1.0 - 0.5 * erfc(t + sl));
      };
      const QuadResult r = quad(f, 0.0, T, sl, sk, "c11 bulk integral");
      return b_ * std::pow(cfg_.base_radius, b_) / constants::sqrt_2 * r.value;
    }
    auto f = [&](double t) { return erfc(t + sk) * (2.0 - erfc(t + sl)); };
    const QuadResult r = quad(f, 0.0, T, sl, sk, "c11 edge integral");
    return std::sqrt(b_) / (2.0 * constants::sqrt_2) * r.value;
  }

  double d11(double sl, double sk) const {
    const double T = trunc_T(sl, sk);
    if (cfg_.regime == Regime::Bulk) {
      auto f1 = [&](double t) {
        return t * (erfc(t - sl) * (2.0 - erfc(t - sk)) -
                    erfc(t + sk) * (2.0 - erfc(t + sl)));
      };
      auto f2 = [&](double t) { return detail::d11_gauss_integrand(t, sl, sk); };
      const QuadResult r1 = quad(f1, 0.0, T, sl, sk, "d11 erfc integral");
      const QuadResult r2 = quad(f2, -T, T, sl, sk, "d11 Gaussian integral");
      return b_ * r1.value + b_ * r2.value;
    }
    auto f1 = [&](double t) { return t * erfc(t + sk) * (2.0 - erfc(t + sl)); };
    auto f2 = [&](double t) { return detail::d11_gauss_integrand(t, sl, sk); };
    const QuadResult r1 = quad(f1, 0.0, T, sl, sk, "d11 edge erfc integral");
    const QuadResult r2 = quad(f2, -T, 0.0, sl, sk, "d11 edge Gaussian integral");
    return (1.0 + 2.0 * alpha_) / 8.0 * (2.0 - erfc(sl)) * erfc(sk) - b_ * r1.value +
           b_ * r2.value;
  }

  double e11(double sl, double sk) const {
    const double T = trunc_T(sl, sk);
    const double dls = sl - sk;
    if (cfg_.regime == Regime::Bulk) {
      const double rmb = std::pow(cfg_.base_radius, -b_);
      auto f1 = [&](double t) {
        return t * t * (erfc(t - sl) * (2.0 - erfc(t - sk)) +
                        (2.0 - erfc(t + sl)) * erfc(t + sk));
      };
      auto f2 = [&](double t) { return detail::e11_p_integrand(t, sl, sk); };
      const QuadResult r1 = quad(f1, 0.0, T, sl, sk, "e11 t^2 integral");
      const QuadResult r2 = quad(f2, -T, T, sl, sk, "e11 quintic integral");
      return -b_ * rmb * std::exp(-0.5 * dls * dls) / (288.0 * constants::sqrt_pi) *
                 detail::cov_quartic(sl, sk) +
             3.0 * b_ * rmb / constants::sqrt_2 * r1.value +
             b_ * rmb / (36.0 * constants::sqrt_2pi) * r2.value;
    }
    const double b32 = b_ * std::sqrt(b_);
    auto f1 = [&](double t) { return t * t * (2.0 - erfc(t + sl)) * erfc(t + sk); };
    auto f2 = [&](double t) { return detail::e11_p_integrand(t, sl, sk); };
    const QuadResult r1 = quad(f1, 0.0, T, sl, sk, "e11 edge t^2 integral");
    const QuadResult r2 = quad(f2, -T, 0.0, sl, sk, "e11 edge quintic integral");
    const double pref = (1.0 + 6.0 * alpha_ + 6.0 * alpha_ * alpha_);
    auto boundary = [&](double sa) {
      return std::exp(-sa * sa) * constants::inv_sqrt_2pi *
             (pref + 2.0 * b_ * (1.0 + 2.0 * alpha_) * (2.0 * sa * sa - 1.0)) /
             (24.0 * std::sqrt(b_));
    };
    return (2.0 - erfc(sl)) * boundary(sk) - erfc(sk) * boundary(sl) -
           b32 * std::exp(-0.5 * dls * dls) / (288.0 * constants::sqrt_pi) * 0.5 *
               erfc((sl + sk) / constants::sqrt_2) * detail::cov_quartic(sl, sk) +
           b32 / (144.0 * constants::sqrt_2) * std::exp(-sl * sl - sk * sk) /
               (2.0 * constants::pi) *
               (55.0 * (sl * sl * sl + sk * sk * sk) +
                73.0 * (sl + sk + sl * sl * sk + sl * sk * sk)) +
           3.0 * b32 / constants::sqrt_2 * r1.value +
           b32 / (36.0 * constants::sqrt_2pi) * r2.value;
  }

 private:
  double offset(std::size_t l) const {
    require(l < cfg_.offsets.size(), "offset index out of range");
    return cfg_.offsets[l];
  }
  double trunc_T(double sl, double sk) const {
    return std::max(std::abs(sl), std::abs(sk)) + spec_.truncation_margin;
  }
  template <class F>
  QuadResult quad(F&& f, double lo, double hi, double sl, double sk,
                  const char* what) const {
    const double pts[4] = {sl, sk, -sl, -sk};
    const QuadResult r = integrate_split(f, lo, hi, pts, spec_);
    return detail::must_converge(r, what, "closed_form_moments");
  }

  double b_;
  double alpha_;
  MergeConfig cfg_;
  QuadratureSpec spec_;
};

/// Limiting covariance matrix of the standardized counts (unit diagonal).
inline std::vector<double> clt_covariance(double b, double alpha, const MergeConfig& cfg,
                                          const QuadratureSpec& spec = {}) {
  const ClosedFormMoments cf(b, alpha, cfg, spec);
  const std::size_t m = cfg.offsets.size();
  std::vector<double> sigma(m * m, 0.0);
  for (std::size_t l = 0; l < m; ++l) sigma[l * m + l] = 1.0;
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = l + 1; k < m; ++k) {
      double v;
      if (cfg.regime == Regime::Bulk) {
        v = cf.c11(cfg.offsets[l], cfg.offsets[k]) /
            (b * std::pow(cfg.base_radius, b) / constants::sqrt_pi);
      } else {
        v = cf.c11(cfg.offsets[l], cfg.offsets[k]) /
            std::sqrt(edge_cf::c2(b, cfg.offsets[l]) * edge_cf::c2(b, cfg.offsets[k]));
      }
      sigma[l * m + k] = v;
      sigma[k * m + l] = v;
    }
  }
  return sigma;
}

}  // namespace diskstat
