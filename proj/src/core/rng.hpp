#pragma once

#include <cstdint>

namespace supaudit {

// SplitMix64. Used everywhere randomness must be reproducible byte-for-byte
// across platforms and across serial/parallel execution; std distributions
// are implementation-defined and never touched.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). Modulo bias is negligible for the bounds used here.
  uint64_t next_below(uint64_t bound) { return next() % bound; }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

 private:
  uint64_t state_;
};

// Stream derivation: resample k of a run seeded with `seed` uses
// substream(seed, k) so parallel and serial evaluation draw identical indices.
inline uint64_t substream(uint64_t seed, uint64_t index) {
  Rng mixer(seed ^ (0x632be59bd9b4e019ULL + index * 0x9e3779b97f4a7c15ULL));
  return mixer.next();
}

}  // namespace supaudit
