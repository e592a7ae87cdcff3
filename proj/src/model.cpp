#include "rrnn/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rrnn {

void validate(const NeuronModel& m, double theta) {
  if (m.kind != NeuronKind::IF) return;
  if (!(m.gamma > 0.0 && m.gamma < 1.0))
    throw std::invalid_argument("IF leak gamma must lie in (0, 1), got " +
                                std::to_string(m.gamma));
  if (!(m.reset < 0.0))
    throw std::invalid_argument("IF reset potential must be negative, got " +
                                std::to_string(m.reset));
  if (!(theta > 0.0))
    throw std::invalid_argument(
        "IF firing threshold theta must be positive, got " +
        std::to_string(theta));
}

void validate(const NetworkConfig& c) {
  if (c.n <= 0) throw std::invalid_argument("network size n must be positive");
  if (c.t_steps < 0) throw std::invalid_argument("t_steps must be >= 0");
  if (c.sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
  if (c.init.std < 0.0)
    throw std::invalid_argument("initial std must be >= 0");
  validate(c.model, c.theta);
  if (const auto* g = std::get_if<GaussianWeights>(&c.weights)) {
    if (g->j2 < 0.0) throw std::invalid_argument("j2 must be >= 0");
  } else {
    const auto& d = std::get<DiluteWeights>(c.weights);
    int slots = d.allow_self ? c.n : c.n - 1;
    if (d.fan_in < 0 || d.fan_in > slots)
      throw std::invalid_argument("dilute fan_in must lie in [0, " +
                                  std::to_string(slots) + "], got " +
                                  std::to_string(d.fan_in));
  }
}

namespace {

void gaussian_row(const GaussianWeights& g, int n, int row, RngStream& rng,
                  std::span<double> out) {
  double m = g.jbar / n;
  double s = std::sqrt(g.j2 / n);
  for (int j = 0; j < n; ++j) out[j] = m + s * rng.normal();
  if (!g.include_diagonal) out[row] = 0.0;
}

void dilute_row(const DiluteWeights& d, int n, int row, RngStream& rng,
                std::span<double> out) {
  for (int j = 0; j < n; ++j) out[j] = 0.0;
  // partial Fisher-Yates over the admissible column indices
  std::vector<int> cand;
  cand.reserve(d.allow_self ? n : n - 1);
  for (int j = 0; j < n; ++j)
    if (d.allow_self || j != row) cand.push_back(j);
  for (int k = 0; k < d.fan_in; ++k) {
    std::size_t pick = k + rng.uniform_index(cand.size() - k);
    std::swap(cand[k], cand[pick]);
    out[cand[k]] = -d.j;
  }
}

}  // namespace

void sample_weights_row(const WeightLaw& law, int n, int row, RngStream& rng,
                        std::span<double> out) {
  if (const auto* g = std::get_if<GaussianWeights>(&law))
    gaussian_row(*g, n, row, rng, out);
  else
    dilute_row(std::get<DiluteWeights>(law), n, row, rng, out);
}

std::vector<double> sample_weights(const WeightLaw& law, int n,
                                   RngStream& rng) {
  std::vector<double> w(std::size_t(n) * n);
  for (int i = 0; i < n; ++i)
    sample_weights_row(law, n, i, rng,
                       std::span<double>(w.data() + std::size_t(i) * n, n));
  return w;
}

}  // namespace rrnn
