#pragma once

// Test-only reference implementations, independent of the library paths
// they check: long-double series/continued-fraction incomplete gamma,
// quadrature of the erfc defining integral, the exact Poisson-binomial
// law by convolution, and a brute-force enumerator for estimator bias.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

// ---- long double regularized lower incomplete gamma (series / CF) ----

inline long double p_gamma_ref(long double a, long double z) {
  if (z <= 0.0L) return 0.0L;
  const long double logpre = a * logl(z) - z - lgammal(a);
  if (z < a + 1.0L) {
    long double term = 1.0L / a;
    long double sum = term;
    for (int k = 1; k < 500000; ++k) {
      term *= z / (a + k);
      sum += term;
      if (term < sum * 1e-21L) break;
    }
    return expl(logpre) * sum;
  }
  const long double tiny = 1e-300L;
  long double b = z + 1.0L - a;
  long double c = 1.0L / tiny;
  long double d = 1.0L / b;
  long double h = d;
  for (int k = 1; k < 500000; ++k) {
    const long double ak = -1.0L * k * (k - a);
    b += 2.0L;
    d = ak * d + b;
    if (fabsl(d) < tiny) d = tiny;
    c = b + ak / c;
    if (fabsl(c) < tiny) c = tiny;
    d = 1.0L / d;
    const long double delta = d * c;
    h *= delta;
    if (fabsl(delta - 1.0L) < 1e-21L) break;
  }
  return 1.0L - expl(logpre) * h;
}

// ---- erfc by adaptive Simpson on the defining integral ----

inline long double simpson_rec(const std::function<long double(long double)>& f,
                               long double lo, long double hi, long double flo,
                               long double fmid, long double fhi, long double whole,
                               long double tol, int depth) {
  const long double mid = 0.5L * (lo + hi);
  const long double lmid = 0.5L * (lo + mid);
  const long double rmid = 0.5L * (mid + hi);
  const long double flm = f(lmid);
  const long double frm = f(rmid);
  const long double left = (mid - lo) / 6.0L * (flo + 4.0L * flm + fmid);
  const long double right = (hi - mid) / 6.0L * (fmid + 4.0L * frm + fhi);
  if (depth <= 0 || fabsl(left + right - whole) < 15.0L * tol) {
    return left + right + (left + right - whole) / 15.0L;
  }
  return simpson_rec(f, lo, mid, flo, flm, fmid, left, tol / 2.0L, depth - 1) +
         simpson_rec(f, mid, hi, fmid, frm, fhi, right, tol / 2.0L, depth - 1);
}

inline long double integrate_simpson(const std::function<long double(long double)>& f,
                                     long double lo, long double hi,
                                     long double tol = 1e-19L) {
  const long double mid = 0.5L * (lo + hi);
  const long double flo = f(lo), fmid = f(mid), fhi = f(hi);
  const long double whole = (hi - lo) / 6.0L * (flo + 4.0L * fmid + fhi);
  return simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

// scaled complement: erfcx(x) = 2/sqrt(pi) int_0^inf e^{-2xs - s^2} ds,
// an O(1)-scaled integrand for every x >= 0 (no tail underflow)
inline long double erfcx_ref(long double x) {
  const long double two_over_sqrt_pi = 1.1283791670955125739L;
  auto f = [x](long double s) { return expl(-2.0L * x * s - s * s); };
  return two_over_sqrt_pi * integrate_simpson(f, 0.0L, 40.0L);
}

inline long double erfc_ref(long double x) {
  if (x < 0.0L) return 2.0L - erfc_ref(-x);
  return expl(-x * x) * erfcx_ref(x);
}

// ---- exact Poisson-binomial pmf by convolution ----

inline std::vector<double> poisson_binomial_pmf(const std::vector<double>& probs) {
  std::vector<double> pmf(1, 1.0);
  pmf.reserve(probs.size() + 1);
  for (double p : probs) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      next[k] += pmf[k] * (1.0 - p);
      next[k + 1] += pmf[k] * p;
    }
    pmf.swap(next);
  }
  return pmf;
}

// ---- enumerate all N-tuples over a finite support, weighted ----
// visit(sample rows, probability)

inline void enumerate_samples(const std::vector<std::vector<double>>& support,
                              const std::vector<double>& probs, std::size_t n_draws,
                              const std::function<void(const std::vector<std::size_t>&,
                                                       double)>& visit) {
  std::vector<std::size_t> idx(n_draws, 0);
  for (;;) {
    double p = 1.0;
    for (std::size_t i : idx) p *= probs[i];
    visit(idx, p);
    std::size_t d = 0;
    while (d < n_draws) {
      if (++idx[d] < support.size()) break;
      idx[d] = 0;
      ++d;
    }
    if (d == n_draws) break;
  }
}

}  // namespace oracle
