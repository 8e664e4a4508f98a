#pragma once

#include <cstdint>

namespace vpfpnn {

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64. Chosen over the
// standard-library engines because the uint64 -> double mapping below is fixed
// by us, so sequences are bit-identical on every platform.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(uint64_t seed) {
    uint64_t z = seed;
    for (auto& word : state_) word = splitmix64(z);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // 53-bit mantissa uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derives a child stream seed from (master, tag, index). Used to give every
  // epoch / purpose its own disjoint stream.
  static uint64_t derive_stream(uint64_t master, uint64_t tag, uint64_t index = 0) {
    uint64_t x = master;
    uint64_t a = splitmix64(x);
    x = a ^ (0x100000001b3ULL * (tag + 1));
    uint64_t b = splitmix64(x);
    x = b ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return splitmix64(x);
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace vpfpnn
