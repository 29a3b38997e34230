#pragma once
#include <cstdint>
#include <initializer_list>

namespace finde {

// Deterministic counter-style generator built on SplitMix64. Substreams are
// derived by mixing a base seed with stream indices, so per-series /
// per-purpose streams are reproducible independent of evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  // Derive an independent substream from (seed, indices...). Identical
  // arguments always give an identical stream.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (caches the second draw).
  double normal();
  // Normal with given mean and standard deviation.
  double normal(double mean, double stddev);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static std::uint64_t mix(std::uint64_t z);

  std::uint64_t state_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace finde
