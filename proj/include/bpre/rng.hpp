#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bpre {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A stream is identified by a 64-bit key and the upper three words of the
/// counter, so every (seed, replica, step) triple owns an independent,
/// reproducible stream with no shared state between replicas.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t key, std::uint64_t stream, std::uint32_t step)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        counter_{0, step, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (index_ == 2) {
      block_ = generate();
      ++counter_[0];
      index_ = 0;
    }
    const auto i = index_++;
    return (static_cast<std::uint64_t>(block_[2 * i + 1]) << 32) | block_[2 * i];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::array<std::uint32_t, 4> generate() const {
    constexpr std::uint32_t kM0 = 0xD2511F53;
    constexpr std::uint32_t kM1 = 0xCD9E8D57;
    constexpr std::uint32_t kW0 = 0x9E3779B9;
    constexpr std::uint32_t kW1 = 0xBB67AE85;
    auto ctr = counter_;
    auto key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int index_ = 2;
};

/// Step index reserved for per-replica draws that are not tied to a generation.
inline constexpr std::uint32_t kAuxStep = 0xFFFFFFFFu;

inline Philox make_stream(std::uint64_t seed, std::uint64_t replica, std::uint32_t step) {
  return Philox(seed, replica, step);
}

}  // namespace bpre
