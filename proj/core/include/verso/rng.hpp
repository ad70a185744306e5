#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace verso {

// Deterministic RNG shared by every randomized component. All draws go
// through the mt19937_64 engine and explicit 53-bit-double construction, so
// results are bit-identical across platforms and standard libraries
// (std distributions are implementation-defined and therefore avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  // Decorrelated substream, e.g. one per sample index or per epoch.
  Rng(std::uint64_t seed, std::uint64_t stream)
      : eng_(splitmix64(splitmix64(seed) ^ (0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform index in [0, n); rejection sampling keeps it exactly uniform.
  std::size_t index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % n);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace verso
