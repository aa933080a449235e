#pragma once

// Counter-based random streams.
//
// Each (seed, stream) pair selects a 64-bit key; the k-th draw of the stream
// is mix64(key + k * golden_gamma), i.e. SplitMix64 started at the key. The
// output depends only on integer arithmetic, so sequences are identical on
// every platform, and any draw can be reached directly by its counter.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace amz {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// Hashes a tuple of integers into one stream index.
constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + kGoldenGamma));
  return h;
}

struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool operator==(const RngSpec&) const = default;
};

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RngSpec spec)
      : key_(mix64(mix64(spec.seed) + mix64(spec.stream ^ 0xd1b54a32d192ed03ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGoldenGamma); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }
  void skip(std::uint64_t n) { counter_ += n; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace amz
