#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "umom/errors.hpp"
#include "umom/rng.hpp"

namespace umom {

// Exact designs above this many subsets are refused; callers should switch
// to the subsampled variant.
inline constexpr std::uint64_t kEnumerationCap = 10'000'000;

// Exact C(n, l) when representable in 64 bits, std::nullopt otherwise.
// Multiplicative formula; every prefix product C(n-l+i, i) is itself a
// binomial coefficient, so the running value is always an exact integer and
// nondecreasing — the first 64-bit overflow is final.
inline std::optional<std::uint64_t> binomial_saturating(std::uint64_t n,
                                                        std::uint64_t l) {
  if (l > n) return 0;
  if (l > n - l) l = n - l;
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= l; ++i) {
    acc = acc * (n - l + i) / i;
    if (acc > static_cast<unsigned __int128>(UINT64_MAX)) return std::nullopt;
  }
  return static_cast<std::uint64_t>(acc);
}

// Visit every l-subset of {0,…,n-1} exactly once, in lexicographic order,
// as a sorted span of indices. The span is only valid during the call.
template <typename Visit>
void for_each_subset(std::size_t n, std::size_t l, Visit&& visit) {
  if (l > n) throw ConfigError("subset order exceeds ground-set size");
  const auto count = binomial_saturating(n, l);
  if (!count || *count > kEnumerationCap)
    throw CapacityError("design too large; use subsampled variant");
  std::vector<std::uint32_t> idx(l);
  for (std::size_t i = 0; i < l; ++i) idx[i] = static_cast<std::uint32_t>(i);
  if (l == 0) {
    visit(std::span<const std::uint32_t>(idx));
    return;
  }
  for (;;) {
    visit(std::span<const std::uint32_t>(idx));
    // Lexicographic successor: advance the rightmost index with headroom.
    std::size_t j = l;
    while (j > 0 && idx[j - 1] == n - l + (j - 1)) --j;
    if (j == 0) break;
    ++idx[j - 1];
    for (std::size_t i = j; i < l; ++i) idx[i] = idx[i - 1] + 1;
  }
}

inline std::vector<std::vector<std::uint32_t>> enumerate_subsets(
    std::size_t n, std::size_t l) {
  std::vector<std::vector<std::uint32_t>> out;
  for_each_subset(n, l, [&](std::span<const std::uint32_t> s) {
    out.emplace_back(s.begin(), s.end());
  });
  return out;
}

// Uniform l-subset of {0,…,n-1} by partial Fisher–Yates shuffle of an index
// pool; the result is sorted. `pool` is caller-owned scratch so hot loops
// do not reallocate.
inline void sample_subset_into(std::size_t n, std::size_t l, Rng& rng,
                               std::vector<std::uint32_t>& pool,
                               std::vector<std::uint32_t>& out) {
  if (l > n) throw ConfigError("subset order exceeds ground-set size");
  pool.resize(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<std::uint32_t>(i);
  out.resize(l);
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  std::sort(out.begin(), out.end());
}

inline std::vector<std::uint32_t> sample_subset(std::size_t n, std::size_t l,
                                                Rng& rng) {
  std::vector<std::uint32_t> pool, out;
  sample_subset_into(n, l, rng, pool, out);
  return out;
}

// Default subsample budget ceil(10 * (n/l) * ln(max(n,3))): the ratio
// T / (n/l) grows like 10*ln(n), so the incomplete design stays dense
// enough while desk-scale runs remain cheap.
inline std::uint64_t default_T(std::uint64_t n, std::uint64_t l) {
  const double ratio = static_cast<double>(n) / static_cast<double>(l);
  const double t =
      std::ceil(10.0 * ratio * std::log(static_cast<double>(std::max<std::uint64_t>(n, 3))));
  return static_cast<std::uint64_t>(t);
}

}  // namespace umom
