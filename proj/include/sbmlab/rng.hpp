#pragma once

// Counter-based RNG (Philox4x32-10) and the distributions the simulators
// draw from. Streams are keyed by (seed, stream_id); consuming a stream is
// stateless with respect to every other stream, so estimates reduce to the
// same value for any worker count.

#include <cmath>
#include <cstdint>

#include "sbmlab/common.hpp"

namespace sbmlab {

namespace philox {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

struct Block {
  std::uint32_t x[4];
};

inline Block round10(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                     std::uint32_t c3, std::uint32_t k0, std::uint32_t k1) {
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    c0 = n0;
    c1 = lo1;
    c2 = n2;
    c3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return Block{{c0, c1, c2, c3}};
}

}  // namespace philox

// One independent stream of a counter-based generator. Cheap to construct;
// construct one per path / tree / run with stream_id = that item's index.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint32_t next_u32() {
    if (have_ == 0) refill();
    return buf_.x[--have_];
  }

  // Uniform on the open interval (0, 1); safe inside log().
  double next_uniform() {
    const std::uint64_t hi = next_u32(), lo = next_u32();
    const std::uint64_t bits = (hi << 32) | lo;
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
  }

  double next_exponential(double rate) { return -std::log(next_uniform()) / rate; }

  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_uniform(), u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    buf_ = philox::round10(static_cast<std::uint32_t>(counter_),
                           static_cast<std::uint32_t>(counter_ >> 32), stream_lo_,
                           stream_hi_, key0_, key1_);
    ++counter_;
    have_ = 4;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t counter_ = 0;
  philox::Block buf_{};
  int have_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sbmlab
