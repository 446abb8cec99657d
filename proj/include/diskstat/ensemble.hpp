#pragma once

// Exact finite-n quantities for the Mittag-Leffler ensemble: merging-radii
// schedules, jump weights, the exact log moment generating function of the
// joint disk counts, analytic low-order cumulants, and the fixed-radii
// decoupling residual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "diskstat/common.hpp"
#include "diskstat/finite_difference.hpp"
#include "diskstat/special_functions.hpp"

namespace diskstat {

struct EnsembleParams {
  double b = 1.0;       // potential exponent
  double alpha = 0.0;   // point charge exponent
  std::int64_t n = 1;   // number of points

  void validate() const {
    require(b > 0.0, "EnsembleParams.b must be > 0");
    require(alpha > -1.0, "EnsembleParams.alpha must be > -1");
    require(n >= 1, "EnsembleParams.n must be >= 1");
  }
  // gamma shape of the j-th radial variable, j = 1..n
  double shape(std::int64_t j) const { return (static_cast<double>(j) + alpha) / b; }
  // droplet edge b^{-1/(2b)}
  double droplet_radius() const { return std::pow(b, -1.0 / (2.0 * b)); }
};

enum class Regime { Bulk, Edge };

struct MergeConfig {
  Regime regime = Regime::Bulk;
  double base_radius = 0.5;      // bulk only; edge base is b^{-1/(2b)}
  std::vector<double> offsets;   // strictly increasing merge offsets

  void validate(const EnsembleParams& params) const {
    require(!offsets.empty(), "MergeConfig.offsets must be nonempty");
    require(all_finite(offsets), "MergeConfig.offsets must be finite");
    require(strictly_increasing(offsets), "MergeConfig.offsets must be strictly increasing");
    if (regime == Regime::Bulk) {
      require(base_radius > 0.0 && base_radius < params.droplet_radius(),
              "MergeConfig.base_radius must lie in (0, b^{-1/(2b)})");
    }
  }
  std::size_t m() const { return offsets.size(); }
};

/// omega_l and their suffix sums Omega_l = sum_{j>=l} omega_j, l = 1..m+1.
struct JumpWeights {
  std::vector<double> omega;      // size m+1, omega[m] = 1
  std::vector<double> big_omega;  // size m+1, big_omega[m] = 1
};

/// Weights of the piecewise-constant fugacity factor. Suffix sums of u are
/// accumulated right-to-left; omega_l = e^{T_{l+1}} expm1(u_l).
inline JumpWeights jump_weights(std::span<const double> u) {
  require(all_finite(u), "Fugacities must be finite");
  const std::size_t m = u.size();
  JumpWeights w;
  w.omega.resize(m + 1);
  w.big_omega.resize(m + 1);
  w.omega[m] = 1.0;
  w.big_omega[m] = 1.0;
  double tail = 0.0;  // u_{l+1} + ... + u_m
  for (std::size_t l = m; l-- > 0;) {
    const double e_tail = std::exp(tail);
    w.omega[l] = e_tail * std::expm1(u[l]);
    tail += u[l];
    w.big_omega[l] = std::exp(tail);
  }
  return w;
}

/// Merging radii r_1 < ... < r_m for the given regime.
inline std::vector<double> radii(const EnsembleParams& params, const MergeConfig& cfg) {
  params.validate();
  cfg.validate(params);
  const double sqrt_n = std::sqrt(static_cast<double>(params.n));
  const std::size_t m = cfg.m();
  std::vector<double> out(m);
  for (std::size_t l = 0; l < m; ++l) {
    double base, arg;
    if (cfg.regime == Regime::Bulk) {
      base = cfg.base_radius;
      arg = 1.0 + constants::sqrt_2 * cfg.offsets[l] /
                      (std::pow(base, params.b) * sqrt_n);
    } else {
      base = params.droplet_radius();
      arg = 1.0 + std::sqrt(2.0 * params.b) * cfg.offsets[l] / sqrt_n;
    }
    if (!(arg > 0.0)) {
      throw std::invalid_argument(
          "radii: n too small for offset " + std::to_string(cfg.offsets[l]) +
          " (radius base expression <= 0)");
    }
    out[l] = base * std::pow(arg, 1.0 / (2.0 * params.b));
  }
  return out;
}

namespace detail {

inline void validate_radii_u(const EnsembleParams& params, std::span<const double> rs,
                             std::span<const double> u) {
  params.validate();
  require(!rs.empty(), "radii must be nonempty");
  require(rs[0] > 0.0, "radii must be positive");
  require(all_finite(rs), "radii must be finite");
  // near-degenerate neighbors are rejected, not merged
  require(strictly_increasing(rs, 1e-12),
          "radii must be strictly increasing with relative gaps >= 1e-12");
  require(u.size() == rs.size(), "fugacity count must match radius count");
  require(all_finite(u), "Fugacities must be finite");
}

// log of the per-j factor 1 + sum_l omega_l P_l. The direct form uses
// log1p; when the signed terms nearly cancel, the positive mixture
// sum_l Omega_l (P_l - P_{l-1}) (P_0 = 0, P_{m+1} = 1) is used instead.
inline double log_factor(const JumpWeights& w, std::span<const double> p) {
  const std::size_t m = p.size();
  double s = 0.0;
  double abssum = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double term = w.omega[l] * p[l];
    s += term;
    abssum += std::abs(term);
  }
  if (1.0 + s > 0.25 && abssum <= 8.0 * (1.0 + std::abs(s))) {
    return std::log1p(s);
  }
  double mix = 0.0;
  double prev = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    mix += w.big_omega[l] * (p[l] - prev);
    prev = p[l];
  }
  mix += 1.0 * (1.0 - prev);
  if (!(mix > 0.0)) {
    throw numerical_error("log_mgf_exact: nonpositive log argument (internal)");
  }
  return std::log(mix);
}

}  // namespace detail

/// ln E[prod_l e^{u_l N(r_l)}] = sum_{j=1}^n ln(1 + sum_l omega_l P(a_j, n r_l^{2b})).
/// The j-sum is accumulated in fixed-size blocks with compensated summation
/// and combined in block order, so results are bit-stable across thread counts.
inline double log_mgf_exact(const EnsembleParams& params, std::span<const double> rs,
                            std::span<const double> u, int threads = 1) {
  detail::validate_radii_u(params, rs, u);
  require(threads >= 1, "threads must be >= 1");
  const std::size_t m = rs.size();
  const JumpWeights w = jump_weights(u);
  std::vector<double> zs(m);
  for (std::size_t l = 0; l < m; ++l) {
    zs[l] = static_cast<double>(params.n) * std::pow(rs[l], 2.0 * params.b);
  }

  constexpr std::int64_t block = 4096;
  const std::int64_t n = params.n;
  const std::int64_t nblocks = (n + block - 1) / block;
  std::vector<KahanSum> block_sums(static_cast<std::size_t>(nblocks));

  auto run_block = [&](std::int64_t bi) {
    const std::int64_t j_lo = bi * block + 1;
    const std::int64_t j_hi = std::min(n, (bi + 1) * block);
    KahanSum acc;
    std::vector<double> p(m);
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      const double a = params.shape(j);
      for (std::size_t l = 0; l < m; ++l) p[l] = reg_lower_gamma(a, zs[l]);
      acc.add(detail::log_factor(w, p));
    }
    block_sums[static_cast<std::size_t>(bi)] = acc;
  };

  if (threads == 1 || nblocks == 1) {
    for (std::int64_t bi = 0; bi < nblocks; ++bi) run_block(bi);
  } else {
    const int nt = std::min<std::int64_t>(threads, nblocks);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        for (std::int64_t bi = t; bi < nblocks; bi += nt) run_block(bi);
      });
    }
    for (auto& th : pool) th.join();
  }

  KahanSum total;
  for (const auto& bs : block_sums) total.add(bs);
  return total.value();
}

/// E[N(r)] = sum_j P(a_j, n r^{2b}).
inline double mean_exact(const EnsembleParams& params, double r) {
  params.validate();
  require(r > 0.0, "radius must be positive");
  const double z = static_cast<double>(params.n) * std::pow(r, 2.0 * params.b);
  KahanSum acc;
  for (std::int64_t j = 1; j <= params.n; ++j) acc.add(reg_lower_gamma(params.shape(j), z));
  return acc.value();
}

/// Var[N(r)] = sum_j P_j (1 - P_j).
inline double variance_exact(const EnsembleParams& params, double r) {
  params.validate();
  require(r > 0.0, "radius must be positive");
  const double z = static_cast<double>(params.n) * std::pow(r, 2.0 * params.b);
  KahanSum acc;
  for (std::int64_t j = 1; j <= params.n; ++j) {
    const double p = reg_lower_gamma(params.shape(j), z);
    acc.add(p * (1.0 - p));
  }
  return acc.value();
}

/// Cov[N(r1), N(r2)] = sum_j P_j(r1) (1 - P_j(r2)) for r1 < r2.
inline double covariance_exact(const EnsembleParams& params, double r1, double r2) {
  params.validate();
  require(r1 > 0.0 && r2 > r1, "covariance_exact: requires 0 < r1 < r2");
  const double z1 = static_cast<double>(params.n) * std::pow(r1, 2.0 * params.b);
  const double z2 = static_cast<double>(params.n) * std::pow(r2, 2.0 * params.b);
  KahanSum acc;
  for (std::int64_t j = 1; j <= params.n; ++j) {
    const double a = params.shape(j);
    acc.add(reg_lower_gamma(a, z1) * (1.0 - reg_lower_gamma(a, z2)));
  }
  return acc.value();
}

struct CumulantResult {
  double value = 0.0;
  double error = 0.0;  // estimated differentiation error
};

/// Joint cumulant kappa_jvec = d^{jvec}_u ln E[...] at u = 0, by central
/// finite differences (order-scaled base step) with 3-level Richardson
/// extrapolation.
inline CumulantResult joint_cumulant_exact(const EnsembleParams& params,
                                           std::span<const double> rs,
                                           std::span<const int> jvec, int threads = 1) {
  require(jvec.size() == rs.size(), "jvec length must match radius count");
  int total = 0;
  for (int j : jvec) total += j;
  require(total >= 1, "joint_cumulant_exact: |jvec| must be >= 1");
  require(total <= 6, "joint_cumulant_exact: orders above 6 are not supported");
  {
    std::vector<double> zero(rs.size(), 0.0);
    detail::validate_radii_u(params, rs, zero);
  }
  auto f = [&](std::span<const double> u) { return log_mgf_exact(params, rs, u, threads); };
  const FdResult fd = central_derivative(f, jvec, fd_step_for_order(total), 3);
  return {fd.value, fd.error};
}

/// ln E[prod e^{u_j N(r_j)}] - sum_j ln E[e^{u_j N(r_j)}] for fixed radii.
inline double decoupling_residual(const EnsembleParams& params, std::span<const double> rs,
                                  std::span<const double> u, int threads = 1) {
  detail::validate_radii_u(params, rs, u);
  require(rs.back() < params.droplet_radius(),
          "decoupling_residual: fixed radii must lie strictly inside the droplet");
  const double joint = log_mgf_exact(params, rs, u, threads);
  KahanSum singles;
  for (std::size_t l = 0; l < rs.size(); ++l) {
    const double r1[1] = {rs[l]};
    const double u1[1] = {u[l]};
    singles.add(log_mgf_exact(params, r1, u1, threads));
  }
  return joint - singles.value();
}

}  // namespace diskstat
