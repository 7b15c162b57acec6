#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hclda {

/// rng-v1: all randomness flows from a single mt19937_64 stream per seed.
/// Uniforms take the top 53 bits of each draw; normals use the two-uniform
/// Box-Muller cosine branch (two draws per variate, no cached spare). The
/// standard pins the mt19937_64 output sequence, so every derived constant is
/// reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the log argument lands in (0, 1].
  double normal() {
    const double u1 =
        static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform over {0, ..., k-1}.
  int categorical(int k) {
    const int v = static_cast<int>(uniform() * k);
    return v >= k ? k - 1 : v;
  }

 private:
  std::mt19937_64 engine_;
};

/// Per-replicate stream seeds, derived with splitmix64 so replicate r of seed
/// s is stable no matter how many replicates run or in which order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + (stream + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace hclda
