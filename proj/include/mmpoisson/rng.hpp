#pragma once

// Keyed random substreams. Every replication of every study draws from its
// own (seed, stream_id) stream, so results do not depend on how work is
// scheduled across threads.

#include <array>
#include <cstdint>
#include <limits>

namespace mmpoisson {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t state = x;
  return splitmix64(state);
}

struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Substream for child `index` (e.g. replication j of a data set). The
  /// parent's (seed, stream_id) pair is hashed into the child's seed.
  constexpr RngSeed child(std::uint64_t index) const {
    return RngSeed{mix64(seed ^ mix64(stream_id ^ 0xD1B54A32D192ED03ULL)), index};
  }

  friend constexpr bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Xoshiro256(RngSeed key) {
    std::uint64_t sm = mix64(key.seed) ^ mix64(key.stream_id + 0x632BE59BD9B4E019ULL);
    for (auto& word : s_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace mmpoisson
