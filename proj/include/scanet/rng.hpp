#pragma once

#include <cstdint>
#include <cmath>

namespace scanet {

// Deterministic RNG used everywhere a seed appears in a config or CLI flag.
// Distributions are implemented inline (no std::*_distribution) so byte-level
// reproducibility does not depend on the standard library version.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), state_(splitmix(seed ^ kPhi)) {
    // warm up so nearby seeds diverge immediately
    next();
    next();
  }

  uint64_t next() {
    // xorshift64* — small, fast, adequate statistical quality for sampling
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive range [lo, hi]
  int uniform_int(int lo, int hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    // multiply-shift; bias is negligible for span << 2^64 and irrelevant here
    return lo + static_cast<int>((static_cast<unsigned __int128>(next()) * span) >> 64);
  }

  // Box-Muller, two fresh uniforms per call (no cached second sample)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream; deterministic in (seed, id).
  Rng fork(uint64_t id) const { return Rng(splitmix(seed_ + kPhi * (id + 1))); }

  uint64_t seed() const { return seed_; }

 private:
  static constexpr uint64_t kPhi = 0x9E3779B97F4A7C15ULL;

  static uint64_t splitmix(uint64_t x) {
    x += kPhi;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  uint64_t seed_;
  uint64_t state_;
};

}  // namespace scanet
