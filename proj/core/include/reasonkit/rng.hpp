#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace rk {

// Derives an independent stream seed from a base seed. SplitMix64 finalizer;
// used so that per-triple / per-epoch streams never overlap.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG. mt19937_64 output is fully specified by the standard;
// the bounded/real draws below are hand-rolled because the std distributions
// are implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw from [0, n). n must be > 0.
  std::uint64_t uniform(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double uniform_real() {
    return double(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller (cached second value).
  double normal() {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v;
    }
    double u1 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    const double u2 = uniform_real();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[std::size_t(uniform(i + 1))]);
    }
  }

  // Seeded selection sampling: keeps k of n indices, order-preserving.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    if (k >= n) {
      out.resize(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = i;
      return out;
    }
    out.reserve(k);
    std::size_t remaining = n, needed = k;
    for (std::size_t i = 0; i < n && needed > 0; ++i) {
      if (uniform(remaining) < needed) {
        out.push_back(i);
        --needed;
      }
      --remaining;
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

}  // namespace rk
