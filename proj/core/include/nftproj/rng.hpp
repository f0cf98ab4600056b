#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace nftproj {

/// Mixes a base seed with a stream index into an independent child seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
/// standard) and every distribution transform is implemented here rather
/// than via std::*_distribution, whose outputs vary across standard
/// libraries. Identical seeds therefore yield identical draws on any
/// conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive. Rejection sampling,
  /// so results are exactly uniform.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Binomial(n, p) by explicit Bernoulli summation. n stays small here
  /// (per-day trade counts), so the O(n) cost is irrelevant.
  std::uint32_t binomial(std::uint32_t n, double p);

  /// Fisher-Yates shuffle driven by uniform_int.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = uniform_int(i + 1);
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nftproj
