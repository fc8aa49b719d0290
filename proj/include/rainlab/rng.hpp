#pragma once

#include <cstdint>
#include <string_view>

namespace rainlab {

// All randomness in the project flows from explicit 64-bit seeds through this
// engine, so runs are reproducible bit for bit.  splitmix64 is small, fast and
// has no observable correlation problems at the sizes used here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in [a,b)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform integer in [0,n).  Modulo bias is < 2^-50 for the n used here.
  uint64_t below(uint64_t n) { return next() % n; }

  // uniform integer in [lo,hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  uint64_t state_;
};

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Stable sub-seed derivation: independent streams are named by a label and an
// index.  Same inputs give the same stream on every platform.
inline uint64_t derive_seed(uint64_t seed, std::string_view label, uint64_t index = 0) {
  uint64_t h = mix64(seed ^ fnv1a64(label));
  return mix64(h + 0x9E3779B97F4A7C15ull * (index + 1));
}

}  // namespace rainlab
