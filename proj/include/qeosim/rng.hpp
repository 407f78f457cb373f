#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "qeosim/constants.hpp"

// Seedable randomness with splittable substreams. Monte Carlo work is cut
// into fixed-size blocks; block i draws from a generator seeded by
// derive_substream(seed, i), so totals are independent of how blocks are
// assigned to threads.  The engine (std::mt19937_64) and the Box-Muller
// transform are both algorithmically pinned, making runs reproducible for a
// given seed on any conforming platform.

namespace qeosim {

/// 64-bit finalizer (splitmix64 step): bijective, well-mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent substream seed for a (seed, shard/block index) pair.
inline std::uint64_t derive_substream(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index));
}

/// Uniform double in (0, 1] — never 0, so log() below is safe.
inline double uniform_unit(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
}

/// Unbiased integer in [0, m) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("uniform_index: m must be > 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % m;
}

/// Standard-normal sampler: Box-Muller on the engine's uniforms, with the
/// second variate of each pair cached.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_unit(gen_);
    const double u2 = uniform_unit(gen_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace qeosim
