#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sparsekit/core/types.hpp"

namespace sparsekit {

// std::mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so every draw below is derived from raw 64-bit words by hand.
class RandomSource {
 public:
  static constexpr const char* algorithm = "mt19937_64/v1";

  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent stream for sub-task `stream`; stable across runs.
  RandomSource fork(std::uint64_t stream) const {
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return RandomSource(z ^ (z >> 31));
  }

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    require(n > 0, errc::invalid_argument, "RandomSource::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do { r = eng_(); } while (r >= limit);
    return r % n;
  }

  // Marsaglia polar method; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  cplx complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal() * s;
    const double im = normal() * s;
    return {re, im};
  }

  bool bernoulli(double p) { return uniform() < p; }

  CVec complex_normal_vector(Eigen::Index n, double variance = 1.0) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_normal(variance);
    return v;
  }

  RVec normal_vector(Eigen::Index n) {
    RVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // k distinct indices from [0, n), sorted (partial Fisher-Yates).
  std::vector<std::size_t> choose(std::size_t n, std::size_t k) {
    require(k <= n, errc::invalid_argument, "RandomSource::choose: k > n");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  SupportSet support(std::size_t n, std::size_t k) { return SupportSet(choose(n, k), n); }

  // Uniform random ordering of [0, n); prefixes give nested random subsets.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < n; ++i) std::swap(pool[i], pool[i + static_cast<std::size_t>(below(n - i))]);
    return pool;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sparsekit
