#pragma once

// Mixed partial derivatives at a point by tensor-product central
// differences with Richardson extrapolation in h^2.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "diskstat/common.hpp"

namespace diskstat {

struct FdResult {
  double value = 0.0;
  double error = 0.0;  // magnitude of the last extrapolation increment
};

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

// Tensor-product central difference of order jvec at step h.
// Per direction i, the j-th derivative stencil uses offsets (j/2 - k)*h,
// k = 0..j, with coefficients (-1)^k C(j,k); error series is even in h.
template <class F>
double central_stencil(F&& f, std::span<const int> jvec, double h) {
  const std::size_t m = jvec.size();
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> u(m, 0.0);
  int total_order = 0;
  for (int j : jvec) total_order += j;
  double sum = 0.0;
  for (;;) {
    double coef = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const int j = jvec[i];
      const auto k = static_cast<int>(idx[i]);
      coef *= ((k % 2) ? -1.0 : 1.0) * binomial(j, k);
      u[i] = (0.5 * j - k) * h;
    }
    sum += coef * f(std::span<const double>(u));
    // odometer over the product grid
    std::size_t i = 0;
    while (i < m) {
      if (++idx[i] <= static_cast<std::size_t>(jvec[i])) break;
      idx[i] = 0;
      ++i;
    }
    if (i == m) break;
  }
  return sum / std::pow(h, total_order);
}

}  // namespace detail

/// Base step balancing h^2 truncation against roundoff amplified by
/// 1/h^order; 0.05 is roundoff-dominated from order ~5 (measured 1.7e-3
/// noise on a 6th derivative at the h/4 stage).
inline double fd_step_for_order(int total_order) {
  if (total_order <= 2) return 0.05;
  if (total_order <= 4) return 0.1;
  return 0.25;
}

/// d^{|jvec|} f / du^{jvec} at u = 0, with `levels` Richardson stages
/// (each stage halves h and removes one even error power).
template <class F>
FdResult central_derivative(F&& f, std::span<const int> jvec, double h0 = 0.05,
                            int levels = 3) {
  require(levels >= 1 && levels <= 6, "central_derivative: levels in [1,6]");
  int total = 0;
  for (int j : jvec) {
    require(j >= 0, "central_derivative: negative order");
    total += j;
  }
  require(total >= 1, "central_derivative: |jvec| must be >= 1");
  std::vector<double> row(levels);
  double h = h0;
  for (int l = 0; l < levels; ++l) {
    row[l] = detail::central_stencil(f, jvec, h);
    h *= 0.5;
  }
  // Richardson triangle in h^2
  double increment = 0.0;
  for (int stage = 1; stage < levels; ++stage) {
    const double factor = std::pow(4.0, stage);
    for (int l = levels - 1; l >= stage; --l) {
      const double refined = (factor * row[l] - row[l - 1]) / (factor - 1.0);
      if (l == levels - 1) increment = refined - row[l];
      row[l] = refined;
    }
  }
  FdResult out;
  out.value = row[levels - 1];
  out.error = std::abs(increment);
  return out;
}

}  // namespace diskstat
