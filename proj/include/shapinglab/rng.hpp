// Deterministic random number generation. Results must be bit-identical for a
// given seed across platforms, so we avoid std:: distributions and use
// xoshiro256** plus explicit uniform/normal transforms.
#pragma once

#include <cmath>
#include <cstdint>

namespace shapinglab {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 seeding, state must not be all-zero
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0,n)
  std::uint64_t below(std::uint64_t n) {
    // rejection to remove modulo bias
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  bool bit() { return (next_u64() >> 63) != 0; }

  // standard normal via Box-Muller; caches the second deviate
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // independent stream for a labelled sub-task
  Rng fork(std::uint64_t stream) const {
    Rng r(0);
    r.state_[0] = state_[0] ^ (0x8764000b8e7b5d25ULL + stream);
    r.state_[1] = state_[1] + 0x9e3779b97f4a7c15ULL * (stream + 1);
    r.state_[2] = state_[2] ^ rotl(stream + 0x1234567890abcdefULL, 23);
    r.state_[3] = state_[3] + rotl(stream, 41) + 1;
    // mix
    for (int i = 0; i < 8; ++i) r.next_u64();
    return r;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4] = {};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace shapinglab
