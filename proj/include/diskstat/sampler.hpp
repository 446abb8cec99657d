#pragma once

// Monte Carlo validation through the radial factorization: the variables
// V_j = R_j^{2b} of the rotation-invariant ensemble are independent
// gamma(shape (j+alpha)/b, rate n), so joint disk counts are threshold
// crossings of independent gamma draws. Includes unbiased k-statistics
// with jackknife standard errors and the CLT standardization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "diskstat/asymptotics.hpp"
#include "diskstat/common.hpp"
#include "diskstat/ensemble.hpp"
#include "diskstat/rng.hpp"

namespace diskstat {

struct SampleBatch {
  EnsembleParams params;
  std::vector<double> radii;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  std::vector<std::uint32_t> counts;  // replicas x m, row-major

  std::size_t m() const { return radii.size(); }
  std::uint32_t count(std::size_t replica, std::size_t l) const {
    return counts[replica * radii.size() + l];
  }
};

/// Draw joint counts N(r_1),...,N(r_m) for `replicas` independent copies.
/// Deterministic given (params, radii, replicas, seed): every replica owns
/// the substream (seed, replica index), so the result is bit-identical
/// across thread counts.
inline SampleBatch sample_counts(const EnsembleParams& params, std::span<const double> rs,
                                 std::size_t replicas, std::uint64_t seed, int threads = 1,
                                 double max_total_draws = 1e9) {
  params.validate();
  require(replicas >= 1, "replicas must be >= 1");
  require(threads >= 1, "threads must be >= 1");
  require(!rs.empty() && rs[0] > 0.0 && all_finite(rs) && strictly_increasing(rs),
          "radii must be positive, finite, strictly increasing");
  const double total = static_cast<double>(replicas) * static_cast<double>(params.n);
  require(total <= max_total_draws,
          "replicas * n exceeds the draw budget (" + std::to_string(max_total_draws) + ")");

  const std::size_t m = rs.size();
  std::vector<double> zs(m);  // compare gamma(rate 1) draws against n r^{2b}
  for (std::size_t l = 0; l < m; ++l) {
    zs[l] = static_cast<double>(params.n) * std::pow(rs[l], 2.0 * params.b);
  }

  SampleBatch batch;
  batch.params = params;
  batch.radii.assign(rs.begin(), rs.end());
  batch.seed = seed;
  batch.replicas = replicas;
  batch.counts.assign(replicas * m, 0);

  auto run_replica = [&](std::size_t i) {
    CounterRng rng(seed, i);
    std::vector<std::uint32_t> hist(m, 0);
    for (std::int64_t j = 1; j <= params.n; ++j) {
      const double g = gamma_draw(rng, params.shape(j));
      std::size_t pos = 0;
      while (pos < m && g >= zs[pos]) ++pos;
      if (pos < m) ++hist[pos];
    }
    std::uint32_t running = 0;
    for (std::size_t l = 0; l < m; ++l) {
      running += hist[l];
      batch.counts[i * m + l] = running;
    }
  };

  if (threads == 1 || replicas == 1) {
    for (std::size_t i = 0; i < replicas; ++i) run_replica(i);
  } else {
    const int nt = std::min<std::size_t>(threads, replicas);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < replicas; i += nt) run_replica(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return batch;
}

struct CumulantEstimate {
  double value = 0.0;
  double stderr_ = 0.0;  // jackknife standard error
};

namespace detail {

// Raw product sums over centered data for every exponent vector f <= jvec,
// indexed by the mixed-radix odometer of (jvec + 1).
struct RawSums {
  std::vector<int> orders;          // per involved column
  std::vector<double> offsets;      // centering constants
  std::vector<double> sums;         // S(f), mixed-radix layout
  std::size_t combos = 1;

  std::size_t index(std::span<const int> f) const {
    std::size_t idx = 0, stride = 1;
    for (std::size_t c = 0; c < orders.size(); ++c) {
      idx += stride * static_cast<std::size_t>(f[c]);
      stride *= static_cast<std::size_t>(orders[c]) + 1;
    }
    return idx;
  }
};

// central product moment m(e) about the sample mean, from raw sums S
// (optionally with one observation removed)
inline double central_moment(const RawSums& rs, std::span<const int> e, double n_eff,
                             std::span<const double> removed) {
  const std::size_t d = rs.orders.size();
  // means of centered data
  std::vector<double> mu(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<int> unit(d, 0);
    unit[c] = 1;
    double s = rs.sums[rs.index(unit)];
    if (!removed.empty()) s -= removed[c];
    mu[c] = s / n_eff;
  }
  std::vector<int> f(d, 0);
  double total = 0.0;
  for (;;) {
    double coef = 1.0;
    for (std::size_t c = 0; c < d; ++c) {
      coef *= binomial(e[c], f[c]) * std::pow(-mu[c], e[c] - f[c]);
    }
    double s = rs.sums[rs.index(f)];
    if (!removed.empty()) {
      double rem = 1.0;
      for (std::size_t c = 0; c < d; ++c) rem *= std::pow(removed[c], f[c]);
      s -= rem;
    }
    total += coef * s;
    std::size_t c = 0;
    while (c < d) {
      if (++f[c] <= e[c]) break;
      f[c] = 0;
      ++c;
    }
    if (c == d) break;
  }
  return total / n_eff;
}

// unbiased k-statistic for the supported order patterns
inline double k_statistic(const RawSums& rs, std::span<const int> orders, double n,
                          std::span<const double> removed) {
  const std::size_t d = orders.size();
  auto m_of = [&](std::initializer_list<int> e) {
    std::vector<int> ev(e);
    return central_moment(rs, ev, n, removed);
  };
  int total = 0;
  for (int o : orders) total += o;

  if (total == 1) {
    std::vector<int> unit(d, 1);
    double s = rs.sums[rs.index(unit)];
    if (!removed.empty()) s -= removed[0];
    return rs.offsets[0] + s / n;
  }
  if (total == 2) {
    const double m2 = d == 1 ? m_of({2}) : m_of({1, 1});
    return n / (n - 1.0) * m2;
  }
  if (total == 3) {
    double m3;
    if (d == 1) m3 = m_of({3});
    else if (d == 2) m3 = m_of({2, 1});
    else m3 = m_of({1, 1, 1});
    return n * n / ((n - 1.0) * (n - 2.0)) * m3;
  }
  // total == 4: N^2 ((N+1) m4 - (N-1) * [sum over the three pairings of the
  // four indices of products of pair central moments]) / ((N-1)(N-2)(N-3))
  double m4, pairs;
  if (d == 1) {
    m4 = m_of({4});
    const double m2 = m_of({2});
    pairs = 3.0 * m2 * m2;
  } else if (d == 2 && orders[0] == 3) {
    m4 = m_of({3, 1});
    pairs = 3.0 * m_of({2, 0}) * m_of({1, 1});
  } else if (d == 2) {  // (2,2)
    m4 = m_of({2, 2});
    const double m11 = m_of({1, 1});
    pairs = m_of({2, 0}) * m_of({0, 2}) + 2.0 * m11 * m11;
  } else if (d == 3) {  // (2,1,1)
    m4 = m_of({2, 1, 1});
    pairs = m_of({2, 0, 0}) * m_of({0, 1, 1}) + 2.0 * m_of({1, 1, 0}) * m_of({1, 0, 1});
  } else {  // (1,1,1,1)
    m4 = m_of({1, 1, 1, 1});
    pairs = m_of({1, 1, 0, 0}) * m_of({0, 0, 1, 1}) +
            m_of({1, 0, 1, 0}) * m_of({0, 1, 0, 1}) +
            m_of({1, 0, 0, 1}) * m_of({0, 1, 1, 0});
  }
  return n * n * ((n + 1.0) * m4 - (n - 1.0) * pairs) /
         ((n - 1.0) * (n - 2.0) * (n - 3.0));
}

}  // namespace detail

/// Unbiased joint k-statistic of order jvec (|jvec| <= 4) with jackknife
/// standard error. jvec indexes the batch columns.
inline CumulantEstimate empirical_cumulants(const SampleBatch& batch,
                                            std::span<const int> jvec) {
  require(jvec.size() == batch.m(), "jvec length must match batch column count");
  int total = 0;
  for (int j : jvec) {
    require(j >= 0, "empirical_cumulants: negative order");
    total += j;
  }
  require(total >= 1 && total <= 4, "empirical_cumulants: |jvec| must be in [1,4]");
  require(batch.replicas >= 100, "empirical_cumulants: needs at least 100 replicas");

  // involved columns, orders sorted descending for the pattern dispatch
  std::vector<std::pair<int, std::size_t>> involved;
  for (std::size_t c = 0; c < jvec.size(); ++c) {
    if (jvec[c] > 0) involved.emplace_back(jvec[c], c);
  }
  std::sort(involved.begin(), involved.end(),
            [](auto& a, auto& b) { return a.first > b.first; });
  const std::size_t d = involved.size();
  const std::size_t n = batch.replicas;

  detail::RawSums rs;
  rs.orders.resize(d);
  rs.offsets.resize(d);
  for (std::size_t c = 0; c < d; ++c) rs.orders[c] = involved[c].first;
  rs.combos = 1;
  for (std::size_t c = 0; c < d; ++c) rs.combos *= static_cast<std::size_t>(rs.orders[c]) + 1;

  // center each involved column near its mean to keep the power sums small
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += batch.count(i, involved[c].second);
    rs.offsets[c] = std::floor(s / static_cast<double>(n));
  }

  // centered per-observation powers, then raw product sums S(f)
  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      x[i * d + c] = static_cast<double>(batch.count(i, involved[c].second)) - rs.offsets[c];
    }
  }
  rs.sums.assign(rs.combos, 0.0);
  std::vector<int> f(d, 0);
  for (std::size_t idx = 0; idx < rs.combos; ++idx) {
    KahanSum k;
    for (std::size_t i = 0; i < n; ++i) {
      double prod = 1.0;
      for (std::size_t c = 0; c < d; ++c) prod *= std::pow(x[i * d + c], f[c]);
      k.add(prod);
    }
    rs.sums[rs.index(f)] = k.value();
    std::size_t c = 0;
    while (c < d) {
      if (++f[c] <= rs.orders[c]) break;
      f[c] = 0;
      ++c;
    }
  }

  std::vector<int> orders(rs.orders);
  CumulantEstimate out;
  out.value = detail::k_statistic(rs, orders, static_cast<double>(n), {});

  // jackknife over leave-one-out recomputations from the same raw sums
  // (for order 1 the removed[] holds x_i; for the pattern path it holds
  // the per-column values so product powers can be rebuilt)
  std::vector<double> jk(n);
  KahanSum jk_mean;
  std::vector<double> removed(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) removed[c] = x[i * d + c];
    jk[i] = detail::k_statistic(rs, orders, static_cast<double>(n - 1), removed);
    jk_mean.add(jk[i]);
  }
  const double jbar = jk_mean.value() / static_cast<double>(n);
  KahanSum ss;
  for (std::size_t i = 0; i < n; ++i) {
    const double dlt = jk[i] - jbar;
    ss.add(dlt * dlt);
  }
  out.stderr_ = std::sqrt((static_cast<double>(n) - 1.0) / static_cast<double>(n) *
                          ss.value());
  return out;
}

/// Pearson correlation of two count columns with jackknife standard error.
/// Scale- and shift-invariant, so it equals the correlation of the
/// standardized counts.
inline CumulantEstimate empirical_correlation(const SampleBatch& batch, std::size_t l,
                                              std::size_t k) {
  require(l < batch.m() && k < batch.m() && l != k,
          "empirical_correlation: needs two distinct column indices");
  require(batch.replicas >= 100, "empirical_correlation: needs at least 100 replicas");
  const std::size_t n = batch.replicas;
  const double ox = std::floor(static_cast<double>(batch.count(0, l)));
  const double oy = std::floor(static_cast<double>(batch.count(0, k)));
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(batch.count(i, l)) - ox;
    const double y = static_cast<double>(batch.count(i, k)) - oy;
    xs[i] = x;
    ys[i] = y;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  auto corr_from = [](double nn, double sx_, double sy_, double sxx_, double syy_,
                      double sxy_) {
    const double cx = sxx_ - sx_ * sx_ / nn;
    const double cy = syy_ - sy_ * sy_ / nn;
    const double cxy = sxy_ - sx_ * sy_ / nn;
    return cxy / std::sqrt(cx * cy);
  };
  CumulantEstimate out;
  out.value = corr_from(static_cast<double>(n), sx, sy, sxx, syy, sxy);
  std::vector<double> jk(n);
  double jbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    jk[i] = corr_from(static_cast<double>(n - 1), sx - xs[i], sy - ys[i],
                      sxx - xs[i] * xs[i], syy - ys[i] * ys[i], sxy - xs[i] * ys[i]);
    jbar += jk[i];
  }
  jbar /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (jk[i] - jbar) * (jk[i] - jbar);
  out.stderr_ = std::sqrt((static_cast<double>(n) - 1.0) / static_cast<double>(n) * ss);
  return out;
}

struct CltNormalization {
  std::vector<double> center;
  std::vector<double> scale;
};

/// Centering and scaling of the limiting CLT: bulk columns are centered at
/// b r^{2b} n + sqrt(2) b r^b s_l sqrt(n) with scale sqrt(b r^b / sqrt(pi))
/// n^{1/4}; edge columns at n + c1(s_l) sqrt(n) with scale
/// sqrt(c2(s_l)) n^{1/4}.
inline CltNormalization clt_normalization(const EnsembleParams& params,
                                          const MergeConfig& cfg) {
  params.validate();
  cfg.validate(params);
  const double b = params.b;
  const double n = static_cast<double>(params.n);
  const double n14 = std::pow(n, 0.25);
  const std::size_t m = cfg.offsets.size();
  CltNormalization out;
  out.center.resize(m);
  out.scale.resize(m);
  if (cfg.regime == Regime::Bulk) {
    const double rb = std::pow(cfg.base_radius, b);
    const double pi14 = std::pow(constants::pi, 0.25);
    for (std::size_t l = 0; l < m; ++l) {
      out.center[l] =
          b * rb * rb * n + constants::sqrt_2 * b * rb * cfg.offsets[l] * std::sqrt(n);
      out.scale[l] = std::sqrt(b * rb) * n14 / pi14;
    }
  } else {
    for (std::size_t l = 0; l < m; ++l) {
      out.center[l] = n + edge_cf::c1(b, cfg.offsets[l]) * std::sqrt(n);
      out.scale[l] = std::sqrt(edge_cf::c2(b, cfg.offsets[l])) * n14;
    }
  }
  return out;
}

/// CLT centering and scaling applied to every count.
inline std::vector<double> standardize(const SampleBatch& batch, const MergeConfig& cfg,
                                       Regime mode) {
  require(cfg.regime == mode, "standardize: regime does not match the batch config");
  require(cfg.offsets.size() == batch.m(), "standardize: offset count mismatch");
  {
    const auto expect = radii(batch.params, cfg);
    for (std::size_t l = 0; l < expect.size(); ++l) {
      require(std::abs(expect[l] - batch.radii[l]) <= 1e-9 * expect[l],
              "standardize: batch radii do not match the config");
    }
  }
  const auto norm = clt_normalization(batch.params, cfg);
  const std::size_t m = batch.m();
  std::vector<double> out(batch.replicas * m);
  for (std::size_t i = 0; i < batch.replicas; ++i) {
    for (std::size_t l = 0; l < m; ++l) {
      out[i * m + l] =
          (static_cast<double>(batch.count(i, l)) - norm.center[l]) / norm.scale[l];
    }
  }
  return out;
}

}  // namespace diskstat
