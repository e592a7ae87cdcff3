#pragma once
#include <array>
#include <cstdint>

namespace rrnn {

// Philox 4x32-10 counter-based generator (Salmon et al., SC'11).  A stream is
// keyed by (seed, stream id); every block of output depends only on that key
// and a 64-bit block counter.  Streams owned by different workers can be
// consumed in any order and still reproduce bit-identical values, which is
// what makes parallel sweeps deterministic.
std::array<uint32_t, 4> philox4x32(uint64_t seed, uint64_t stream_id,
                                   uint64_t block);

enum class StreamPurpose : uint32_t {
  Weights = 1,
  Init = 2,
  Noise = 3,
  Perturb = 4,
  Oracle = 5,
  Spiking = 6,
  Connectivity = 7,
};

// Packs a purpose tag with a 48-bit index so unrelated consumers of the same
// seed never collide.
inline uint64_t stream_id(StreamPurpose p, uint64_t index) {
  return (uint64_t(p) << 48) | (index & 0xFFFFFFFFFFFFull);
}

class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t id) : seed_(seed), id_(id) {}

  uint32_t next_u32();
  uint64_t next_u64();
  double uniform();              // (0, 1], safe under log
  double uniform_co();           // [0, 1)
  uint64_t uniform_index(uint64_t bound);  // unbiased draw from [0, bound)
  double normal();               // N(0, 1) via Box-Muller

  uint64_t seed() const { return seed_; }
  uint64_t id() const { return id_; }

 private:
  uint64_t seed_, id_;
  uint64_t block_ = 0;
  std::array<uint32_t, 4> buf_{};
  int avail_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace rrnn
