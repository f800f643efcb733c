#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "umom/errors.hpp"
#include "umom/rng.hpp"

namespace umom {

enum class Family { gaussian, student_t, pareto, lognormal, rademacher };

// A synthetic law with known mean, standard deviation and moment index:
// epsilon_max is the supremum of eps with E|X - mu|^(2+eps) finite
// (exclusive; infinity when all moments exist).
struct DistributionSpec {
  Family family = Family::gaussian;
  double p1 = 0.0;  // gaussian: mu, student_t: nu, pareto: alpha, lognormal: mu_log
  double p2 = 1.0;  // gaussian: sigma, pareto: scale, lognormal: sigma_log
  double mu = 0.0;
  double sigma = 1.0;
  double epsilon_max = std::numeric_limits<double>::infinity();
};

inline DistributionSpec make_gaussian(double mu, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian: sigma must be positive");
  DistributionSpec s;
  s.family = Family::gaussian;
  s.p1 = mu;
  s.p2 = sigma;
  s.mu = mu;
  s.sigma = sigma;
  return s;
}

// Raw Student t; variance nu/(nu-2) requires nu > 2. Moments of order
// >= nu diverge, so epsilon_max = nu - 2.
inline DistributionSpec make_student_t(double nu) {
  if (!(nu > 2.0)) throw ConfigError("student_t: nu must exceed 2");
  DistributionSpec s;
  s.family = Family::student_t;
  s.p1 = nu;
  s.mu = 0.0;
  s.sigma = std::sqrt(nu / (nu - 2.0));
  s.epsilon_max = nu - 2.0;
  return s;
}

inline DistributionSpec make_pareto(double alpha, double scale) {
  if (!(alpha > 2.0)) throw ConfigError("pareto: alpha must exceed 2");
  if (!(scale > 0.0)) throw ConfigError("pareto: scale must be positive");
  DistributionSpec s;
  s.family = Family::pareto;
  s.p1 = alpha;
  s.p2 = scale;
  s.mu = alpha * scale / (alpha - 1.0);
  s.sigma = (scale / (alpha - 1.0)) * std::sqrt(alpha / (alpha - 2.0));
  s.epsilon_max = alpha - 2.0;
  return s;
}

// Parameters are the log-scale mean and standard deviation.
inline DistributionSpec make_lognormal(double mu_log, double sigma_log) {
  if (!(sigma_log > 0.0)) throw ConfigError("lognormal: sigma_log must be positive");
  DistributionSpec s;
  s.family = Family::lognormal;
  s.p1 = mu_log;
  s.p2 = sigma_log;
  const double v = sigma_log * sigma_log;
  s.mu = std::exp(mu_log + v / 2.0);
  s.sigma = std::sqrt((std::exp(v) - 1.0) * std::exp(2.0 * mu_log + v));
  return s;
}

inline DistributionSpec make_rademacher() {
  DistributionSpec s;
  s.family = Family::rademacher;
  s.mu = 0.0;
  s.sigma = 1.0;
  return s;
}

inline double draw_one(const DistributionSpec& spec, Rng& rng) {
  switch (spec.family) {
    case Family::gaussian:
      return spec.p1 + spec.p2 * rng.normal();
    case Family::student_t:
      return rng.student_t(spec.p1);
    case Family::pareto:
      return rng.pareto(spec.p1, spec.p2);
    case Family::lognormal:
      return rng.lognormal(spec.p1, spec.p2);
    case Family::rademacher:
      return rng.rademacher();
  }
  throw ConfigError("unknown distribution family");
}

inline std::vector<double> draw(const DistributionSpec& spec, Rng& rng,
                                std::size_t count) {
  std::vector<double> xs(count);
  for (auto& x : xs) x = draw_one(spec, rng);
  return xs;
}

inline double standardize(const DistributionSpec& spec, double x) {
  return (x - spec.mu) / spec.sigma;
}

// One draw of (X - mu)/sigma; hot path for the diagnostics.
inline double draw_standardized(const DistributionSpec& spec, Rng& rng) {
  if (spec.family == Family::gaussian) return rng.normal();
  return standardize(spec, draw_one(spec, rng));
}

}  // namespace umom
