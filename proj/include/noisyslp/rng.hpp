#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace nslp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// The key is the 64-bit seed; the upper half of the 128-bit counter is
/// the stream id, so (seed, stream) pairs give independent sequences.
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (avail_ == 0) {
      block_ = next_block(counter_++);
      avail_ = 2;
    }
    const std::size_t i = 2 - avail_--;
    return (static_cast<std::uint64_t>(block_[2 * i]) << 32) | block_[2 * i + 1];
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Jump to 128-bit block `block`; the next output is its first half.
  void seek(std::uint64_t block) {
    counter_ = block;
    avail_ = 0;
  }

 private:
  using Block = std::array<std::uint32_t, 4>;

  Block next_block(std::uint64_t ctr) const {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    Block c = {static_cast<std::uint32_t>(ctr), static_cast<std::uint32_t>(ctr >> 32),
               static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += kW0;
      k1 += kW1;
    }
    return c;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block block_{};
  std::size_t avail_ = 0;
};

}  // namespace nslp
