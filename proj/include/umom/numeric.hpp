#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "umom/errors.hpp"

namespace umom {

// Cascade (pairwise) summation. Error grows like O(log n) instead of O(n),
// which keeps the reduction identities between estimator paths inside
// 1e-12 relative tolerance. Deterministic for a fixed input order.
inline double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw DataError("empty sequence");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// Median with the midpoint convention for even lengths: the average of the
// two central order statistics, itself a minimizer of z -> sum |v_i - z|.
// Reorders xs.
inline double median_in_place(std::span<double> xs) {
  if (xs.empty()) throw DataError("empty sequence");
  const std::size_t n = xs.size();
  auto mid = xs.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(xs.begin(), mid);
  return (lo + hi) / 2.0;
}

inline double median(std::span<const double> xs) {
  std::vector<double> scratch(xs.begin(), xs.end());
  return median_in_place(scratch);
}

// Linearly interpolated quantile of an ascending sequence (the common
// "type 7" convention: h = q*(n-1), interpolate between floor and ceil).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("empty sequence");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(h);
  const double g = h - static_cast<double>(i);
  if (g == 0.0 || i + 1 == sorted.size()) return sorted[i];
  return sorted[i] + g * (sorted[i + 1] - sorted[i]);
}

}  // namespace umom
