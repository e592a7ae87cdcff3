#pragma once
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "rrnn/rng.hpp"
#include "rrnn/transfer.hpp"

namespace rrnn {

enum class NeuronKind { AF, BF, IF };

// Neuron family.  gamma and reset only matter for the discrete IF map; in
// that convention the firing threshold theta is positive and the reset
// potential is negative.
struct NeuronModel {
  NeuronKind kind = NeuronKind::AF;
  double gamma = 0.5;   // leak, 0 < gamma < 1
  double reset = -1.0;  // reset potential, < 0
};

void validate(const NeuronModel& m, double theta);

// Leak map of the discrete IF neuron: contracts by gamma on the subthreshold
// window (reset/gamma, theta), everything outside is sent to reset.
inline double if_leak(double gamma, double reset, double theta, double v) {
  return (v > reset / gamma && v < theta) ? gamma * v : reset;
}

// Entries J_ij ~ N(jbar/n, j2/n), independent.  When include_diagonal is
// false the diagonal is zeroed (the draw is still consumed so stream
// alignment does not depend on the flag).
struct GaussianWeights {
  double jbar = 0.0;
  double j2 = 1.0;
  bool include_diagonal = true;
};

// Exactly fan_in entries per row equal to -j (inhibitory pulse coupling),
// positions drawn uniformly without replacement, self-connection excluded
// unless allow_self.
struct DiluteWeights {
  double j = 0.1;
  int fan_in = 1;
  bool allow_self = false;
};

using WeightLaw = std::variant<GaussianWeights, DiluteWeights>;

struct InitialLaw {
  double mean = 0.0;
  double std = 0.0;  // 0 means point mass
};

struct NetworkConfig {
  NeuronModel model;
  TransferFunction f;
  int n = 0;
  int t_steps = 0;
  double theta = 0.0;
  double sigma = 0.0;
  WeightLaw weights = GaussianWeights{};
  InitialLaw init;
  uint64_t seed = 0;
};

void validate(const NetworkConfig& c);

// One row of the coupling matrix.  The full sampler consumes the stream row
// by row in index order, so statistics of matrices too large to hold can be
// streamed row-wise with identical draws.
void sample_weights_row(const WeightLaw& law, int n, int row, RngStream& rng,
                        std::span<double> out);
std::vector<double> sample_weights(const WeightLaw& law, int n,
                                   RngStream& rng);

}  // namespace rrnn
