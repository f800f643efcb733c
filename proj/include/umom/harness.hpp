#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "umom/distributions.hpp"
#include "umom/errors.hpp"
#include "umom/estimators.hpp"
#include "umom/numeric.hpp"
#include "umom/parallel.hpp"
#include "umom/rng.hpp"
#include "umom/subsets.hpp"

namespace umom {

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> ids = {
      "mom", "block_umom_exact", "block_umom_subsampled", "sample_mean"};
  return ids;
}

struct DeviationStudyConfig {
  DistributionSpec spec;
  std::size_t N = 0;
  std::size_t k = 1;
  std::size_t l = 1;
  std::uint64_t T = 0;  // 0 -> default_T(n, l)
  std::vector<std::string> estimators;
  std::size_t replicates = 0;
  std::vector<double> t_grid;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;  // 0 -> hardware concurrency
};

// Column-major replicate-by-estimator matrix of errors (estimate - mu).
struct ErrorMatrix {
  std::size_t replicates = 0;
  std::vector<std::string> estimator_ids;
  std::vector<double> data;  // data[e * replicates + i]

  std::span<const double> column(std::size_t e) const {
    return std::span<const double>(data).subspan(e * replicates, replicates);
  }
};

// Runs all requested estimators on the same per-replicate batch (paired
// design). Replicate i derives its streams from stream_seed(master, i):
// child 0 drives the batch draw, child 1 the subsample design, so batches
// are identical across estimator sets and thread counts.
inline ErrorMatrix run_replicates(const DeviationStudyConfig& config) {
  if (config.replicates == 0) throw ConfigError("replicates must be positive");
  if (config.estimators.empty()) throw ConfigError("no estimators requested");
  for (const auto& id : config.estimators) {
    const auto& known = known_estimators();
    if (std::find(known.begin(), known.end(), id) == known.end())
      throw ConfigError("unknown estimator: " + id);
  }
  const BlockPlan plan = make_block_plan(config.N, config.k, config.l);
  const bool wants_exact =
      std::find(config.estimators.begin(), config.estimators.end(),
                "block_umom_exact") != config.estimators.end();
  if (wants_exact) {
    const auto count = binomial_saturating(plan.n, plan.l);
    if (!count || *count > kEnumerationCap)
      throw CapacityError("design too large; use subsampled variant");
  }
  const std::uint64_t T_eff =
      config.T != 0 ? config.T : default_T(plan.n, plan.l);

  ErrorMatrix out;
  out.replicates = config.replicates;
  out.estimator_ids = config.estimators;
  out.data.resize(config.replicates * config.estimators.size());

  const std::size_t R = config.replicates;
  parallel_for_indexed(R, config.threads, [&](std::size_t i) {
    const std::uint64_t rep = stream_seed(config.master_seed, i);
    Rng batch_rng(stream_seed(rep, 0));
    const SampleBatch batch{draw(config.spec, batch_rng, config.N)};
    std::optional<BlockMeans> bm;
    auto means = [&]() -> const BlockMeans& {
      if (!bm) bm = block_means(batch, plan);
      return *bm;
    };
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      const std::string& id = config.estimators[e];
      double value;
      if (id == "mom") {
        value = mom_estimate(batch, config.k).value;
      } else if (id == "block_umom_exact") {
        value = block_umom_exact_from_means(means()).value;
      } else if (id == "block_umom_subsampled") {
        value = block_umom_subsampled_from_means(means(), T_eff,
                                                 stream_seed(rep, 1))
                    .value;
      } else {
        value = sample_mean(batch).value;
      }
      out.data[e * R + i] = value - config.spec.mu;
    }
  });
  return out;
}

// Empirical variance of sqrt(N) * err with its gaussian-approximation
// standard error sqrt(2/(R-1)) * var.
inline std::pair<double, double> variance_summary(std::span<const double> errors,
                                                  std::size_t N) {
  if (errors.size() < 2)
    throw ConfigError("variance summary needs at least 2 replicates");
  const double scale = std::sqrt(static_cast<double>(N));
  std::vector<double> scaled(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) scaled[i] = scale * errors[i];
  const double mean = mean_of(scaled);
  std::vector<double> sq(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double d = scaled[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(errors.size() - 1);
  return {var, std::sqrt(2.0 / static_cast<double>(errors.size() - 1)) * var};
}

struct TailPoint {
  double t = 0.0;
  double threshold = 0.0;     // sigma * sqrt(t/N)
  double p_hat = 0.0;         // fraction of |err| >= threshold
  double p_stderr = 0.0;
  double c_hat = 0.0;         // implied constant, or its upper bound if censored
  bool censored = false;      // p_hat == 0: c_hat is the bound t/(2 ln(3R))
  double dev_quantile = 0.0;  // |err| quantile at level 1 - 2 e^{-t}
};

struct TailCurve {
  std::string estimator_id;
  std::vector<TailPoint> points;
  double var_scaled = 0.0;
  double var_stderr = 0.0;
};

// Exceedance curve for one estimator column: p_hat(t) at thresholds
// sigma*sqrt(t/N), the implied constant c_hat = t / (2 ln(3/p_hat)) from
// inverting the deviation bound at equality, and deviation quantiles used
// for estimator comparisons.
inline TailCurve tail_curve(std::span<const double> errors, double sigma,
                            std::size_t N, std::span<const double> t_grid,
                            std::string estimator_id = "") {
  if (errors.empty()) throw ConfigError("tail curve needs replicates");
  if (t_grid.empty()) throw ConfigError("t grid must be nonempty");
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
    if (!(t_grid[i] < t_grid[i + 1]))
      throw ConfigError("t grid must be strictly increasing");
  if (!(t_grid.front() > 0.0)) throw ConfigError("t grid must be positive");

  const double R = static_cast<double>(errors.size());
  std::vector<double> abs_err(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i)
    abs_err[i] = std::abs(errors[i]);
  std::sort(abs_err.begin(), abs_err.end());

  TailCurve curve;
  curve.estimator_id = std::move(estimator_id);
  if (errors.size() >= 2) {
    const auto [v, se] = variance_summary(errors, N);
    curve.var_scaled = v;
    curve.var_stderr = se;
  }
  curve.points.reserve(t_grid.size());
  for (const double t : t_grid) {
    TailPoint pt;
    pt.t = t;
    pt.threshold = sigma * std::sqrt(t / static_cast<double>(N));
    const auto lo =
        std::lower_bound(abs_err.begin(), abs_err.end(), pt.threshold);
    const double exceed = static_cast<double>(abs_err.end() - lo);
    pt.p_hat = exceed / R;
    pt.p_stderr = std::sqrt(pt.p_hat * (1.0 - pt.p_hat) / R);
    if (exceed == 0.0) {
      pt.censored = true;
      pt.c_hat = t / (2.0 * std::log(3.0 * R));
    } else {
      pt.c_hat = t / (2.0 * std::log(3.0 / pt.p_hat));
    }
    const double level = 1.0 - 2.0 * std::exp(-t);
    pt.dev_quantile = quantile_sorted(abs_err, std::max(level, 0.0));
    curve.points.push_back(pt);
  }
  return curve;
}

struct ComparisonRow {
  double t = 0.0;
  double quantile_ratio = 1.0;  // target / baseline deviation quantiles
};

struct ComparisonTable {
  std::string target_id;
  std::string baseline_id;
  double var_ratio = 1.0;  // baseline var_scaled / target var_scaled
  std::vector<ComparisonRow> rows;
};

// Paired comparison of two curves from the same run_replicates call:
// per-t deviation-quantile ratios (target/baseline) and the scaled-variance
// ratio (baseline/target).
inline ComparisonTable compare_estimators(const TailCurve& target,
                                          const TailCurve& baseline) {
  if (target.points.size() != baseline.points.size())
    throw ConfigError("comparison requires curves on the same t grid");
  ComparisonTable table;
  table.target_id = target.estimator_id;
  table.baseline_id = baseline.estimator_id;
  table.var_ratio = target.var_scaled != 0.0
                        ? baseline.var_scaled / target.var_scaled
                        : 1.0;
  table.rows.reserve(target.points.size());
  for (std::size_t i = 0; i < target.points.size(); ++i) {
    if (target.points[i].t != baseline.points[i].t)
      throw ConfigError("comparison requires curves on the same t grid");
    ComparisonRow row;
    row.t = target.points[i].t;
    const double qt = target.points[i].dev_quantile;
    const double qb = baseline.points[i].dev_quantile;
    row.quantile_ratio = (qt == qb) ? 1.0 : qt / qb;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace umom
