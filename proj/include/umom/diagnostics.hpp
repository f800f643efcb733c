#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "umom/distributions.hpp"
#include "umom/errors.hpp"
#include "umom/estimators.hpp"
#include "umom/numeric.hpp"
#include "umom/parallel.hpp"
#include "umom/rng.hpp"

namespace umom {

// Confidence-parameter range [L, M] on which the sub-Gaussian deviation
// bound is claimed: L = (n/l) * ln(m) / m^eps, M = n / (l^2 * ln(max(l,2))).
struct TheoremRange {
  double L = 0.0;
  double M = 0.0;
};

inline TheoremRange theorem_range(std::size_t n, std::size_t l, std::size_t m,
                                  double epsilon) {
  TheoremRange r;
  const double nd = static_cast<double>(n);
  const double ld = static_cast<double>(l);
  const double md = static_cast<double>(m);
  r.L = (nd / ld) * std::log(md) / std::pow(md, epsilon);
  r.M = nd / (ld * ld * std::log(static_cast<double>(std::max<std::size_t>(l, 2))));
  return r;
}

// Recommended geometry for a given (N, k): group size m = floor(N/k),
// subset order l = the divisor of m nearest ln(m) (ties to the smaller),
// and an 8-point geometric t-grid inside [max(L, 0.5), M]. Below t ~ 0.5
// exceedance probabilities saturate, hence the grid floor.
struct ParameterPlan {
  std::size_t N = 0;
  std::size_t k = 0;
  std::size_t l = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  double L = 0.0;
  double M = 0.0;
  double epsilon = 0.0;
  std::vector<double> t_grid;
  bool grid_warning = false;   // true when M <= max(L, 0.5): empty grid
  bool l_small_enough = true;  // l < m^epsilon sanity flag
};

inline ParameterPlan parameter_plan(std::size_t N, std::size_t k,
                                    double epsilon) {
  if (k == 0 || k > N) throw ConfigError("too many blocks for sample size");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  ParameterPlan p;
  p.N = N;
  p.k = k;
  p.m = N / k;
  p.epsilon = epsilon;
  const double target = std::log(static_cast<double>(p.m));
  std::size_t best = 1;
  double best_dist = std::abs(1.0 - target);
  for (std::size_t d = 2; d <= p.m; ++d) {
    if (p.m % d != 0) continue;
    const double dist = std::abs(static_cast<double>(d) - target);
    if (dist < best_dist) {
      best = d;
      best_dist = dist;
    }
  }
  p.l = best;
  p.n = p.l * p.k;
  const TheoremRange r = theorem_range(p.n, p.l, p.m, epsilon);
  p.L = r.L;
  p.M = r.M;
  p.l_small_enough =
      static_cast<double>(p.l) < std::pow(static_cast<double>(p.m), epsilon);
  const double lo = std::max(r.L, 0.5);
  if (r.M > lo) {
    const std::size_t points = 8;
    p.t_grid.resize(points);
    const double ratio = r.M / lo;
    for (std::size_t i = 0; i < points; ++i)
      p.t_grid[i] =
          lo * std::pow(ratio, static_cast<double>(i) /
                                   static_cast<double>(points - 1));
    p.t_grid.front() = lo;
    p.t_grid.back() = r.M;
  } else {
    p.grid_warning = true;
  }
  return p;
}

// Monte Carlo estimate of the normal-approximation functional
// g(m) = (6/sqrt(m)) * E[Y^2 * min(|Y|, sqrt(m))], Y standardized.
// Returns (estimate, stderr). Welford accumulation keeps the degenerate
// (rademacher) case exactly zero-variance.
inline std::pair<double, double> g_of_m(const DistributionSpec& spec,
                                        std::size_t m, std::size_t R,
                                        Rng& rng) {
  if (m == 0) throw ConfigError("group size m must be positive");
  if (R < 100) throw ConfigError("g(m) needs at least 100 replicates");
  const double root_m = std::sqrt(static_cast<double>(m));
  const double scale = 6.0 / root_m;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    const double y = draw_standardized(spec, rng);
    const double w = scale * y * y * std::min(std::abs(y), root_m);
    const double delta = w - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (w - mean);
  }
  const double var = m2 / static_cast<double>(R - 1);
  return {mean, std::sqrt(var / static_cast<double>(R))};
}

// g(m) over an m-grid with common random numbers: the integrand is
// pointwise nonincreasing in m, so shared draws make the whole curve
// exactly nonincreasing, not just in expectation.
inline std::vector<std::pair<double, double>> g_of_m_grid(
    const DistributionSpec& spec, const std::vector<std::size_t>& m_grid,
    std::size_t R, Rng& rng) {
  if (R < 100) throw ConfigError("g(m) needs at least 100 replicates");
  for (std::size_t m : m_grid)
    if (m == 0) throw ConfigError("group size m must be positive");
  std::vector<double> mean(m_grid.size(), 0.0), m2(m_grid.size(), 0.0);
  std::vector<double> root_m(m_grid.size());
  for (std::size_t i = 0; i < m_grid.size(); ++i)
    root_m[i] = std::sqrt(static_cast<double>(m_grid[i]));
  for (std::size_t r = 0; r < R; ++r) {
    const double y = draw_standardized(spec, rng);
    const double y2 = y * y;
    const double ay = std::abs(y);
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
      const double w = (6.0 / root_m[i]) * y2 * std::min(ay, root_m[i]);
      const double delta = w - mean[i];
      mean[i] += delta / static_cast<double>(r + 1);
      m2[i] += delta * (w - mean[i]);
    }
  }
  std::vector<std::pair<double, double>> out(m_grid.size());
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    const double var = m2[i] / static_cast<double>(R - 1);
    out[i] = {mean[i], std::sqrt(var / static_cast<double>(R))};
  }
  return out;
}

// Nested Monte Carlo estimate of the variance of the first-order projection
// of the subset-median score at deviation threshold sqrt(t/N):
//
//   h(Z_i) = sqrt(l) * E[ sign_-( (1/l)(Z~_1 + … + Z~_{l-1} + Z_i) - sqrt(t/N) ) | Z_i ]
//
// with sign_-(u) = -1 for u <= 0, +1 for u > 0, Z's being standardized block
// means of b draws, and the centering constant dropped (it does not affect
// the variance). Each outer draw owns the stream stream_seed(seed, i), so
// the result is independent of thread count.
//
// The naive variance of inner-averaged signs overstates Var(h) by the mean
// inner sampling variance; the standard correction subtracts the unbiased
// estimate l * mean_i(1 - s_i^2) / (R_inner - 1). Returns (estimate, stderr)
// with the estimate clamped at zero.
inline std::pair<double, double> hajek_variance(const DistributionSpec& spec,
                                                const BlockPlan& plan,
                                                double t,
                                                std::size_t R_outer,
                                                std::size_t R_inner,
                                                std::uint64_t seed,
                                                unsigned threads = 1) {
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  if (R_outer < 100 || R_inner < 100)
    throw ConfigError("hajek_variance needs at least 100 outer and inner replicates");
  if (plan.l < 2) throw ConfigError("hajek_variance needs subset order l >= 2");
  const std::size_t l = plan.l;
  const std::size_t b = plan.b;
  const double shift = std::sqrt(t / static_cast<double>(plan.N_used));
  const double inv_l = 1.0 / static_cast<double>(l);
  std::vector<double> s(R_outer);
  parallel_for_indexed(R_outer, threads, [&](std::size_t i) {
    Rng rng(stream_seed(seed, i));
    std::vector<double> buf(b);
    auto block_mean = [&]() {
      for (std::size_t j = 0; j < b; ++j) buf[j] = draw_standardized(spec, rng);
      return pairwise_sum(buf) / static_cast<double>(b);
    };
    const double z_i = block_mean();
    std::int64_t sum_sign = 0;
    for (std::size_t r = 0; r < R_inner; ++r) {
      double acc = z_i;
      for (std::size_t j = 0; j + 1 < l; ++j) acc += block_mean();
      sum_sign += (acc * inv_l - shift > 0.0) ? 1 : -1;
    }
    s[i] = static_cast<double>(sum_sign) / static_cast<double>(R_inner);
  });
  const double root_l = std::sqrt(static_cast<double>(l));
  std::vector<double> h(R_outer);
  for (std::size_t i = 0; i < R_outer; ++i) h[i] = root_l * s[i];
  const double mean_h = mean_of(h);
  std::vector<double> sq(R_outer), inner_var(R_outer);
  for (std::size_t i = 0; i < R_outer; ++i) {
    const double d = h[i] - mean_h;
    sq[i] = d * d;
    inner_var[i] = 1.0 - s[i] * s[i];
  }
  const double raw_var =
      pairwise_sum(sq) / static_cast<double>(R_outer - 1);
  const double correction = static_cast<double>(l) * mean_of(inner_var) /
                            static_cast<double>(R_inner - 1);
  const double estimate = std::max(0.0, raw_var - correction);
  const double stderr_est =
      std::sqrt(2.0 / static_cast<double>(R_outer - 1)) * raw_var;
  return {estimate, stderr_est};
}

}  // namespace umom
