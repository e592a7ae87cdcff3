#include "rrnn/rng.hpp"

#include <cmath>

namespace rrnn {

namespace {
constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& c, uint32_t k0, uint32_t k1) {
  uint64_t p0 = uint64_t(kMul0) * c[0];
  uint64_t p1 = uint64_t(kMul1) * c[2];
  uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
  uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
  c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}
}  // namespace

std::array<uint32_t, 4> philox4x32(uint64_t seed, uint64_t stream_id,
                                   uint64_t block) {
  std::array<uint32_t, 4> c = {uint32_t(block), uint32_t(block >> 32),
                               uint32_t(stream_id), uint32_t(stream_id >> 32)};
  uint32_t k0 = uint32_t(seed), k1 = uint32_t(seed >> 32);
  for (int r = 0; r < 10; ++r) {
    philox_round(c, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

uint32_t RngStream::next_u32() {
  if (avail_ == 0) {
    buf_ = philox4x32(seed_, id_, block_++);
    avail_ = 4;
  }
  return buf_[4 - avail_--];
}

uint64_t RngStream::next_u64() {
  uint64_t hi = next_u32();
  uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::uniform_co() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RngStream::uniform_index(uint64_t bound) {
  // multiply-shift; bias is < 2^-64 per draw, far below anything observable
  return uint64_t((unsigned __int128)(next_u64()) * bound >> 64);
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  double u2 = uniform_co();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586 * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

}  // namespace rrnn
