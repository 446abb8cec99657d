#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace diskstat {

/// Raised when an algorithm fails to reach its accuracy target
/// (quadrature non-convergence, series overflow, internal consistency).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double sqrt_pi = 1.7724538509055160273;
inline constexpr double inv_sqrt_pi = 0.56418958354775628695;
inline constexpr double sqrt_2 = 1.4142135623730950488;
inline constexpr double sqrt_2pi = 2.5066282746310005024;
inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;
}  // namespace constants

/// Compensated accumulator for long sums of mixed magnitude.
/// Neumaier's variant of Kahan summation: also tracks the error when the
/// incoming term is larger than the running sum.
class KahanSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  void add(const KahanSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

/// Strictly increasing, with a guard against near-degenerate neighbors
/// (relative gap below `min_rel_gap` is treated as user error, not merged).
inline bool strictly_increasing(std::span<const double> xs, double min_rel_gap = 0.0) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) return false;
    if (min_rel_gap > 0.0 && xs[i] - xs[i - 1] < min_rel_gap * std::abs(xs[i - 1])) return false;
  }
  return true;
}

}  // namespace diskstat
