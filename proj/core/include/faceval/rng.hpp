#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace faceval {

/// Deterministic random source. The raw mt19937_64 stream is fully
/// specified by the standard; all distributions here are hand-rolled on
/// top of it so results do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
  uint64_t bounded(uint64_t n);

  /// Standard normal via Box-Muller (no cached spare).
  double normal() ;
  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle, driven by bounded().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[bounded(i)]);
    }
  }

  /// Derives an independent stream seed from a parent seed and a tag.
  /// Used so per-capture / per-record generation is order-independent.
  static uint64_t derive(uint64_t seed, std::string_view tag);

 private:
  std::mt19937_64 engine_;
};

}  // namespace faceval
