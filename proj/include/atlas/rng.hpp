#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace atlas {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }
  Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
    // Two independent splitmix chains; the stream chain is offset so that
    // (s, t) and (t, s) do not coincide.
    std::uint64_t a = seed;
    std::uint64_t b = stream ^ 0xD1B54A32D192ED03ULL;
    for (auto& w : s_) w = splitmix64(a) ^ (splitmix64(b) * 0xA0761D6478BD642FULL);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  bool operator==(const Xoshiro256pp&) const = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

/// A reproducible random stream: (seed, stream_id) determines every draw.
/// Replicas take disjoint child streams via split().
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(seed, stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream for replica/sub-task k. Same seed, hashed stream id.
  RngStream split(std::uint64_t k) const {
    std::uint64_t h = stream_id_ * 0x9E3779B97F4A7C15ULL + k;
    return RngStream(seed_, splitmix64(h));
  }

  static constexpr result_type min() { return Xoshiro256pp::min(); }
  static constexpr result_type max() { return Xoshiro256pp::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (Boost ziggurat).
  double normal() { return normal_(engine_); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Xoshiro256pp engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace atlas
