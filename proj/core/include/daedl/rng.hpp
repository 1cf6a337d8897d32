#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace daedl {

/// Seeded generator with self-contained variate transforms.
/// std::mt19937_64 output is pinned by the standard and the transforms
/// below avoid the implementation-defined std distributions, so a given
/// seed reproduces the same stream on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the spare is cached.
  double normal();

  /// Uniform index in [0, n). Rejection sampling, unbiased.
  std::size_t uniform_index(std::size_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace daedl
