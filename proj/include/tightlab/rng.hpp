#pragma once

#include <cstdint>
#include <limits>

namespace tightlab {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of stream `stream` under `master`. Stream keys are a pure function of
/// the pair, so any subset of streams can be generated in any order.
constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(mix64(master) ^ (stream * 0xD1342543DE82EF95ULL + 0x632BE59BD9B4E019ULL));
}

/// Counter-based generator: output k of a stream is mix64(key + (k+1)*gamma).
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t master, std::uint64_t stream) noexcept
      : state_(stream_key(master, stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace tightlab
