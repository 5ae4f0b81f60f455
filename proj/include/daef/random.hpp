#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace daef {

/// Seeded generator whose outputs are fully specified: the engine is
/// mt19937_64 and every distribution is implemented here rather than taken
/// from <random>, whose distributions differ between standard libraries.
/// Federated nodes rebuild identical auxiliary weights from a broadcast seed,
/// so the exact stream matters.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; both halves of each pair are used.
  double normal();

  /// Uniform integer on [0, bound), rejection sampled.
  std::uint64_t below(std::uint64_t bound);

  /// Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes two 64-bit values into a derived seed (splitmix64 finaliser).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace daef
