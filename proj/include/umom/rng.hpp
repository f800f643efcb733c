#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace umom {

// Fixed 64-bit mixing bijection (the SplitMix64 finalizer).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Child seed i of a master seed. Every replicate, batch and subsample design
// derives its stream through this, so results are reproducible and
// independent of scheduling. Stable across versions by contract.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t i) {
  return splitmix64(master + 0x9E3779B97F4A7C15ull * (i + 1));
}

// Deterministic generator with explicit variate transforms. The standard
// <random> distribution objects are implementation-defined, so all
// transforms are spelled out here; output depends only on the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), bound >= 1; rejection sampling, no
  // modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via the Marsaglia polar method; the second variate of
  // each accepted pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Student t with nu degrees of freedom (Bailey's polar method).
  double student_t(double nu) {
    double u, v, w;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      w = u * u + v * v;
    } while (w >= 1.0 || w == 0.0);
    return u * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
  }

  // Pareto with shape alpha and minimum `scale` (inverse CDF). 1 - U is in
  // (0, 1], so draws are always >= scale and never divide by zero.
  double pareto(double alpha, double scale) {
    return scale * std::pow(1.0 - uniform01(), -1.0 / alpha);
  }

  double lognormal(double mu_log, double sigma_log) {
    return std::exp(mu_log + sigma_log * normal());
  }

  // Uniform on {-1, +1} from one bit.
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace umom
