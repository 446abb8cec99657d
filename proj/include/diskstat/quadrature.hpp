#pragma once

// Adaptive Gauss-Kronrod quadrature, 15-point Kronrod / 7-point Gauss base
// rule with globally-adaptive bisection of the worst interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "diskstat/common.hpp"

namespace diskstat {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  double truncation_margin = 10.0;  // Gaussian tail cutoff, in units of t

  void validate() const {
    require(rel_tol > 0.0, "QuadratureSpec.rel_tol must be > 0");
    require(abs_tol > 0.0, "QuadratureSpec.abs_tol must be > 0");
    require(truncation_margin >= 4.0, "QuadratureSpec.truncation_margin must be >= 4");
  }
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

// QK15 abscissae/weights on [-1,1]; odd-indexed nodes are the G7 rule.
inline constexpr double gk15_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double gk15_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double gk15_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
struct Panel {
  double lo, hi, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
inline void gk15_panel(F&& f, double lo, double hi, double& value, double& error) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double fc = f(c);
  double resk = gk15_wk[7] * fc;
  double resg = gk15_wg[3] * fc;
  double resabs = gk15_wk[7] * std::abs(fc);
  double fv[15];
  fv[7] = fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * gk15_nodes[i];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    fv[i] = f1;
    fv[14 - i] = f2;
    resk += gk15_wk[i] * (f1 + f2);
    resabs += gk15_wk[i] * (std::abs(f1) + std::abs(f2));
    if (i % 2 == 1) resg += gk15_wg[i / 2] * (f1 + f2);
  }
  const double mean = 0.5 * resk;
  double resasc = gk15_wk[7] * std::abs(fc - mean);
  for (int i = 0; i < 7; ++i) {
    resasc += gk15_wk[i] * (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
  }
  value = resk * h;
  resabs *= std::abs(h);
  resasc *= std::abs(h);
  double err = std::abs((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / eps50) {
    err = std::max(err, eps50 * resabs);
  }
  error = err;
}

}  // namespace detail

/// Integrate f over [lo,hi] to max(abs_tol, rel_tol*|I|), bisecting the
/// worst panel. Non-convergence is reported in the result, not thrown.
template <class F>
QuadResult integrate(F&& f, double lo, double hi, const QuadratureSpec& spec = {},
                     int max_panels = 4000) {
  QuadResult out;
  if (lo == hi) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel<F>> panels;
  double value, error;
  detail::gk15_panel(f, lo, hi, value, error);
  out.evaluations = 15;
  panels.push({lo, hi, value, error});
  double total = value;
  double total_err = error;
  for (int iter = 0; iter < max_panels; ++iter) {
    const double target = std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
    if (total_err <= target) {
      out.converged = true;
      break;
    }
    detail::Panel<F> worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= worst.lo || mid >= worst.hi) {
      // interval no longer bisectable; keep its estimate
      panels.push(worst);
      break;
    }
    double v1, e1, v2, e2;
    detail::gk15_panel(f, worst.lo, mid, v1, e1);
    detail::gk15_panel(f, mid, worst.hi, v2, e2);
    out.evaluations += 30;
    total += v1 + v2 - worst.value;
    total_err += e1 + e2 - worst.error;
    panels.push({worst.lo, mid, v1, e1});
    panels.push({mid, worst.hi, v2, e2});
  }
  // recompute sums from surviving panels for a tighter result
  KahanSum vsum;
  double esum = 0.0;
  while (!panels.empty()) {
    vsum.add(panels.top().value);
    esum += panels.top().error;
    panels.pop();
  }
  out.value = vsum.value();
  out.error = esum;
  if (!out.converged) {
    out.converged = esum <= std::max(spec.abs_tol, spec.rel_tol * std::abs(out.value));
  }
  return out;
}

/// Integrate with interior breakpoints (scale changes of the integrand).
template <class F>
QuadResult integrate_split(F&& f, double lo, double hi, std::span<const double> breaks,
                           const QuadratureSpec& spec = {}) {
  std::vector<double> pts;
  pts.push_back(lo);
  for (double b : breaks) {
    if (b > lo && b < hi) pts.push_back(b);
  }
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  QuadResult out;
  out.converged = true;
  KahanSum vsum;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    QuadResult r = integrate(f, pts[i - 1], pts[i], spec);
    vsum.add(r.value);
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
  }
  out.value = vsum.value();
  return out;
}

}  // namespace diskstat
