#pragma once

#include <cstdint>

namespace cautious {

// Deterministic counter-based generator (splitmix64 core). A (seed, stream)
// pair fully determines the output sequence, so parallel workers that own
// disjoint streams reproduce bit-identically regardless of scheduling, and
// the same pair replays the same draws across runs.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed),
        stream_(stream),
        state_(mix(mix(seed + kGamma) ^ mix(stream * kGamma + 1))) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double next_double_in(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, bound), bound > 0. Multiply-shift reduction; the
  // residual bias is below bound / 2^64, irrelevant at our scales.
  std::uint64_t next_below(std::uint64_t bound) {
    return std::uint64_t(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Child generator on an unrelated stream. Depends only on (seed, stream,
  // substream), not on how many draws this generator has produced.
  SeededRng derive(std::uint64_t substream) const {
    return SeededRng(seed_, mix(stream_ + kGamma * (substream + 1)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
};

}  // namespace cautious
