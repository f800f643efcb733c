#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "umom/errors.hpp"
#include "umom/numeric.hpp"
#include "umom/rng.hpp"
#include "umom/subsets.hpp"

namespace umom {

struct SampleBatch {
  std::vector<double> values;
  std::size_t count() const { return values.size(); }
};

inline SampleBatch make_batch(std::vector<double> values) {
  if (values.empty()) throw DataError("empty sequence");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("non-finite observation");
  return SampleBatch{std::move(values)};
}

// The (N, k, l) block geometry: n = l*k contiguous blocks of size
// b = floor(N/(l*k)); group size m = l*b; the trailing N - n*b observations
// are discarded.
struct BlockPlan {
  std::size_t N_total = 0;
  std::size_t k = 0;
  std::size_t l = 0;
  std::size_t n = 0;
  std::size_t b = 0;
  std::size_t m = 0;
  std::size_t N_used = 0;
};

inline BlockPlan make_block_plan(std::size_t N_total, std::size_t k,
                                 std::size_t l) {
  if (k == 0 || l == 0) throw ConfigError("k and l must be positive");
  if (N_total == 0) throw DataError("empty sequence");
  const std::size_t n = l * k;
  if (n > N_total) throw ConfigError("too many blocks for sample size");
  BlockPlan p;
  p.N_total = N_total;
  p.k = k;
  p.l = l;
  p.n = n;
  p.b = N_total / n;
  p.m = l * p.b;
  p.N_used = n * p.b;
  return p;
}

struct BlockMeans {
  std::vector<double> z;
  BlockPlan plan;
};

// Block j (0-based) averages observations [j*b, (j+1)*b).
inline BlockMeans block_means(const SampleBatch& batch, const BlockPlan& plan) {
  if (plan.N_total != batch.count())
    throw ConfigError("block plan does not match batch size");
  BlockMeans bm;
  bm.plan = plan;
  bm.z.resize(plan.n);
  const std::span<const double> xs(batch.values);
  for (std::size_t j = 0; j < plan.n; ++j)
    bm.z[j] = pairwise_sum(xs.subspan(j * plan.b, plan.b)) /
              static_cast<double>(plan.b);
  return bm;
}

struct SubsetDesignInfo {
  enum class Kind { exact, subsampled };
  Kind kind = Kind::exact;
  std::size_t n = 0;
  std::size_t l = 0;
  std::uint64_t T = 0;     // subsampled only
  std::uint64_t seed = 0;  // subsampled only
};

struct EstimateReport {
  std::string estimator_id;
  double value = 0.0;
  BlockPlan plan;
  std::uint64_t subset_means_evaluated = 0;
  SubsetDesignInfo design;
  std::size_t discarded_tail = 0;
};

inline double subset_mean(std::span<const double> z,
                          std::span<const std::uint32_t> idx,
                          std::vector<double>& buf) {
  buf.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) buf[i] = z[idx[i]];
  return pairwise_sum(buf) / static_cast<double>(idx.size());
}

// Median over all C(n,l) subset means of the block means, enumerated in
// lexicographic order. Refuses designs above kEnumerationCap.
inline EstimateReport block_umom_exact_from_means(const BlockMeans& bm) {
  const std::size_t n = bm.plan.n;
  const std::size_t l = bm.plan.l;
  const auto count = binomial_saturating(n, l);
  if (!count || *count > kEnumerationCap)
    throw CapacityError("design too large; use subsampled variant");
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(*count));
  std::vector<double> buf;
  for_each_subset(n, l, [&](std::span<const std::uint32_t> idx) {
    means.push_back(subset_mean(bm.z, idx, buf));
  });
  EstimateReport r;
  r.estimator_id = "block_umom_exact";
  r.value = median_in_place(means);
  r.plan = bm.plan;
  r.subset_means_evaluated = *count;
  r.design = SubsetDesignInfo{SubsetDesignInfo::Kind::exact, n, l, 0, 0};
  r.discarded_tail = bm.plan.N_total - bm.plan.N_used;
  return r;
}

inline EstimateReport block_umom_exact(const SampleBatch& batch,
                                       const BlockPlan& plan) {
  return block_umom_exact_from_means(block_means(batch, plan));
}

// Median over T subsets drawn i.i.d. uniformly from the full design (with
// replacement across draws; indices within a subset are distinct).
// Deterministic given (batch, plan, T, seed).
inline EstimateReport block_umom_subsampled_from_means(const BlockMeans& bm,
                                                       std::uint64_t T,
                                                       std::uint64_t seed) {
  if (T == 0) throw ConfigError("subsample count T must be positive");
  const std::size_t n = bm.plan.n;
  const std::size_t l = bm.plan.l;
  Rng rng(seed);
  std::vector<double> means(T);
  std::vector<std::uint32_t> pool, idx;
  std::vector<double> buf;
  for (std::uint64_t t = 0; t < T; ++t) {
    sample_subset_into(n, l, rng, pool, idx);
    means[t] = subset_mean(bm.z, idx, buf);
  }
  EstimateReport r;
  r.estimator_id = "block_umom_subsampled";
  r.value = median_in_place(means);
  r.plan = bm.plan;
  r.subset_means_evaluated = T;
  r.design = SubsetDesignInfo{SubsetDesignInfo::Kind::subsampled, n, l, T, seed};
  r.discarded_tail = bm.plan.N_total - bm.plan.N_used;
  return r;
}

inline EstimateReport block_umom_subsampled(const SampleBatch& batch,
                                            const BlockPlan& plan,
                                            std::uint64_t T,
                                            std::uint64_t seed) {
  return block_umom_subsampled_from_means(block_means(batch, plan), T, seed);
}

// Classical median of means: k disjoint contiguous groups of floor(N/k)
// observations. Identical to the overlapping-block estimator with l = 1.
inline EstimateReport mom_estimate(const SampleBatch& batch, std::size_t k) {
  const BlockPlan plan = make_block_plan(batch.count(), k, 1);
  EstimateReport r = block_umom_exact_from_means(block_means(batch, plan));
  r.estimator_id = "mom";
  return r;
}

inline EstimateReport sample_mean(const SampleBatch& batch) {
  EstimateReport r;
  r.estimator_id = "sample_mean";
  r.value = mean_of(batch.values);
  r.plan = make_block_plan(batch.count(), 1, 1);
  r.subset_means_evaluated = 1;
  r.design = SubsetDesignInfo{SubsetDesignInfo::Kind::exact, 1, 1, 0, 0};
  r.discarded_tail = 0;
  return r;
}

// Median over all subsets of floor(N/k) raw observations (blocks of size 1).
// Reference estimator; exact enumeration only, so tiny N.
inline EstimateReport umom_full(const SampleBatch& batch, std::size_t k) {
  const std::size_t N = batch.count();
  if (k == 0 || k > N) throw ConfigError("too many blocks for sample size");
  const std::size_t l = N / k;
  EstimateReport r = block_umom_exact(batch, make_block_plan(N, k, l));
  r.estimator_id = "umom_full";
  return r;
}

// M-estimation objective F(z) = sum_J |sqrt(m) * (mean_J - z)| over the
// supplied design; convex piecewise-linear, minimized by the median.
inline double eval_objective(const BlockMeans& bm,
                             std::span<const double> subset_means, double z) {
  if (subset_means.empty()) throw DataError("empty sequence");
  const double root_m = std::sqrt(static_cast<double>(bm.plan.m));
  std::vector<double> terms(subset_means.size());
  for (std::size_t i = 0; i < subset_means.size(); ++i)
    terms[i] = std::abs(root_m * (subset_means[i] - z));
  return pairwise_sum(terms);
}

// Seeded Fisher–Yates pre-shuffle for data whose file order may not be
// exchangeable; blocks are contiguous, so shuffling restores symmetry.
inline SampleBatch shuffle_batch(const SampleBatch& batch, std::uint64_t seed) {
  SampleBatch out = batch;
  Rng rng(seed);
  for (std::size_t i = out.values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(out.values[i - 1], out.values[j]);
  }
  return out;
}

}  // namespace umom
