#pragma once

// Counter-based random number generation (Philox4x32-10). Each trajectory
// owns a stream identified by (master seed, stream index), so ensembles are
// reproducible bit for bit no matter how trajectories are scheduled across
// threads.

#include <array>
#include <cmath>
#include <cstdint>

#include "cqc/common.hpp"

namespace cqc {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  Philox4x32(std::uint64_t key, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(key)),
        key1_(static_cast<std::uint32_t>(key >> 32)),
        stream_(stream) {}

  // Keyed bijection of (counter, stream) -> 128 bits.
  Block block(std::uint64_t counter) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = kMult0 * static_cast<std::uint64_t>(c0);
      std::uint64_t p1 = kMult1 * static_cast<std::uint64_t>(c2);
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
  }

 private:
  static constexpr std::uint32_t kMult0 = 0xD2511F53u;
  static constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key0_, key1_;
  std::uint64_t stream_;
};

// Sequential draw interface over one Philox stream.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : philox_(seed, stream) {}

  std::uint32_t next_u32() {
    if (word_ == 4) {
      block_ = philox_.block(counter_++);
      word_ = 0;
    }
    return block_[word_++];
  }

  // Uniform on (0,1), 53-bit resolution, never exactly 0 or 1.
  double uniform() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    std::uint64_t bits = (hi << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  Philox4x32 philox_;
  std::uint64_t counter_ = 0;
  Philox4x32::Block block_{};
  int word_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cqc
