#pragma once

#include <cstdint>
#include <span>

namespace evfgn {

/// splitmix64 finalizer; the only mixing function used for seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Named sub-seed streams derived from a single run seed.
enum class SeedStream : std::uint64_t {
  init = 1,
  shuffle = 2,
  synthetic = 3,
  input = 4,
  oracle = 5,
};

/// derive_seed(seed, stream) = splitmix64(seed ^ splitmix64(stream)).
constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) noexcept {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

/// xoshiro256** generator with hand-written distributions, so that sequences
/// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one value per call; the pair partner is discarded).
  double normal() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace evfgn
