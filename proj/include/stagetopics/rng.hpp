#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace stagetopics {

// PCG32 (O'Neill). Self-contained so that seeded runs are bit-identical
// across platforms and standard libraries; std::shuffle and the std
// distributions leave their output implementation-defined.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0xda3e39cb94b95bdbULL) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next();
    state_ += seed;
    next();
  }

  // Restore from a serialized (state, inc) pair.
  static Pcg32 fromState(std::uint64_t state, std::uint64_t inc) {
    Pcg32 g(0);
    g.state_ = state;
    g.inc_ = inc;
    return g;
  }

  std::uint32_t next() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  // Unbiased integer in [0, bound) via threshold rejection.
  std::uint32_t bounded(std::uint32_t bound) {
    std::uint32_t threshold = (-bound) % bound;
    for (;;) {
      std::uint32_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double nextDouble() {
    std::uint64_t hi = next();
    std::uint64_t lo = next();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  std::uint64_t state() const { return state_; }
  std::uint64_t inc() const { return inc_; }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// splitmix64 step; used to derive independent seeds for sub-runs.
inline std::uint64_t mixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive a run seed from a base seed and a small label (stage, category, K...).
inline std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t label) {
  return mixSeed(base ^ mixSeed(label));
}

// Fisher-Yates with an explicit generator; deterministic for a given seed.
template <typename T>
void shuffleInPlace(std::vector<T>& items, Pcg32& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.bounded(static_cast<std::uint32_t>(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace stagetopics
