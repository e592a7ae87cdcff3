#include "rrnn/twopop.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace rrnn {

namespace {

inline double integrand_scale(const TransferFunction& f, double sd) {
  return f.kind == TransferKind::Logistic ? f.gain * sd : 0.0;
}

// The regime classifier only resolves structure down to 1e-3 of the order
// parameters, so the quadrature ladder is capped at 512 nodes (pole error
// below 1e-4 for field scales up to ~15); full refinement would spend most
// of a bifurcation map's budget polishing digits the labels never see.
const GaussHermite& rule_for(const GaussHermite& gh,
                             const TransferFunction& f, double sd) {
  return refined_for_scale(gh, std::min(integrand_scale(f, sd), 7.2));
}

inline void potential_law(const TwoPopParams& p, const TwoPopInitial& init,
                          const std::array<MomentSeries, 2>& s, int k, int t,
                          double& mean, double& var) {
  if (t == 0) {
    mean = init.m[k];
    var = init.q[k];
  } else {
    mean = s[k].m[t] - p.theta[k];
    var = s[k].q[t] + p.sigma * p.sigma;
  }
}

}  // namespace

void validate(const TwoPopParams& p) {
  if (!(p.lambda > 0.0 && p.lambda < 1.0))
    throw std::invalid_argument("population fraction must lie in (0, 1)");
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      if (p.j2[k][j] < 0.0)
        throw std::invalid_argument("coupling variances must be >= 0");
  if (p.sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
}

TwoPopParams gd_to_params(const GDPoint& pt) {
  if (!(pt.g > 0.0)) throw std::invalid_argument("g must be > 0");
  if (pt.d < 0.0) throw std::invalid_argument("d must be >= 0");
  TwoPopParams p;
  double g = pt.g, d = pt.d;
  p.jbar[0][0] = g * d;
  p.jbar[0][1] = -2.0 * g * d;
  p.jbar[1][0] = g * d;
  p.jbar[1][1] = 0.0;
  p.j2[0][0] = g * g;
  p.j2[0][1] = 2.0 * g * g;
  p.j2[1][0] = g * g;
  p.j2[1][1] = 0.0;
  // the couplings absorb the transfer slope g (the family is f(g u) with
  // unit-variance blocks (1, 2, 1, 0)), so the inhibitory threshold of 0.3
  // neuron units scales with g like every other term of the potential
  p.theta[0] = 0.0;
  p.theta[1] = 0.3 * g;
  return p;
}

std::array<MomentSeries, 2> propagate_two_pop(const TwoPopParams& p,
                                              const TwoPopInitial& init,
                                              int t_steps,
                                              const GaussHermite& gh,
                                              bool with_covariance) {
  validate(p);
  if (t_steps < 0) throw std::invalid_argument("t_steps must be >= 0");
  if (init.q[0] < 0.0 || init.q[1] < 0.0)
    throw std::invalid_argument("initial variances must be >= 0");

  std::array<MomentSeries, 2> s;
  for (int k = 0; k < 2; ++k) {
    s[k].t_steps = t_steps;
    s[k].m.assign(t_steps + 1, 0.0);
    s[k].q.assign(t_steps + 1, 0.0);
    s[k].c = SymMat(with_covariance ? t_steps + 1 : 0);
    s[k].m[0] = init.m[k];
    s[k].q[0] = init.q[k];
    if (with_covariance) s[k].c(0, 0) = init.q[k];
  }

  const auto& f = p.f;
  // per-source activation statistics E f and E f^2, cached per time
  std::array<std::vector<double>, 2> fmean, fsq;
  for (int j = 0; j < 2; ++j) {
    fmean[j].assign(t_steps + 1, 0.0);
    fsq[j].assign(t_steps + 1, 0.0);
  }

  for (int t = 0; t < t_steps; ++t) {
    for (int j = 0; j < 2; ++j) {
      double mean, var;
      potential_law(p, init, s, j, t, mean, var);
      double sd = std::sqrt(var);
      const GaussHermite& g = rule_for(gh, f, sd);
      fmean[j][t] = integrate1(g, [&](double xi) { return f(sd * xi + mean); });
      fsq[j][t] = integrate1(g, [&](double xi) {
        double v = f(sd * xi + mean);
        return v * v;
      });
    }
    for (int k = 0; k < 2; ++k) {
      s[k].m[t + 1] = 0.0;
      s[k].q[t + 1] = 0.0;
      for (int j = 0; j < 2; ++j) {
        s[k].m[t + 1] += p.jbar[k][j] * fmean[j][t];
        s[k].q[t + 1] += p.j2[k][j] * fsq[j][t];
      }
      if (with_covariance) s[k].c(t + 1, t + 1) = s[k].q[t + 1];
    }
  }
  if (!with_covariance) return s;

  // initial coordinates are independent of the fields: the first covariance
  // row factorizes source by source
  for (int t = 1; t < t_steps; ++t)
    for (int k = 0; k < 2; ++k) {
      double v = 0.0;
      for (int j = 0; j < 2; ++j)
        v += p.j2[k][j] * fmean[j][0] * fmean[j][t];
      s[k].c.set_sym(1, t + 1, v);
    }

  // interior recursion: each source contributes the pair expectation under
  // its own two-time law
  for (int t = 2; t <= t_steps; ++t) {
    for (int u = 2; u < t; ++u) {
      double pair_j[2];
      for (int j = 0; j < 2; ++j) {
        double mean_s, var_s, mean_t, var_t;
        potential_law(p, init, s, j, u - 1, mean_s, var_s);
        potential_law(p, init, s, j, t - 1, mean_t, var_t);
        const GaussHermite& g =
            rule_for(gh, f, std::sqrt(std::max(var_s, var_t)));
        pair_j[j] = gaussian_pair_expectation(g, mean_s, mean_t, var_s, var_t,
                                              s[j].c(u - 1, t - 1), f, f);
      }
      for (int k = 0; k < 2; ++k)
        s[k].c.set_sym(u, t,
                       p.j2[k][0] * pair_j[0] + p.j2[k][1] * pair_j[1]);
    }
  }
  return s;
}

std::array<TwinSeries, 2> two_pop_twin_series(const TwoPopParams& p,
                                              const TwoPopInitial& init,
                                              const double (&c12_0)[2],
                                              int t_steps,
                                              const GaussHermite& gh) {
  for (int k = 0; k < 2; ++k)
    if (std::abs(c12_0[k]) > init.q[k] + 1e-12)
      throw std::invalid_argument(
          "initial cross-covariance exceeds the initial variance");
  auto s = propagate_two_pop(p, init, t_steps, gh, false);

  std::array<TwinSeries, 2> tw;
  for (int k = 0; k < 2; ++k) {
    tw[k].c12.assign(t_steps + 1, 0.0);
    tw[k].d12.assign(t_steps + 1, 0.0);
    tw[k].c12[0] = std::min(c12_0[k], init.q[k]);
    tw[k].d12[0] = 2.0 * (init.q[k] - tw[k].c12[0]);
  }
  const double sig2 = p.sigma * p.sigma;
  for (int t = 0; t < t_steps; ++t) {
    double pair_j[2];
    for (int j = 0; j < 2; ++j) {
      double mean, var;
      potential_law(p, init, s, j, t, mean, var);
      const GaussHermite& g = rule_for(gh, p.f, std::sqrt(var));
      pair_j[j] = gaussian_pair_expectation(g, mean, mean, var, var,
                                            tw[j].c12[t], p.f, p.f);
    }
    for (int k = 0; k < 2; ++k) {
      tw[k].c12[t + 1] = p.j2[k][0] * pair_j[0] + p.j2[k][1] * pair_j[1];
      // each copy's potential carries q + sigma^2 of variance with only c12
      // of it shared
      tw[k].d12[t + 1] =
          2.0 * (s[k].q[t + 1] + sig2) - 2.0 * tw[k].c12[t + 1];
    }
  }
  return tw;
}

const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::FixedPoint: return "fixed-point";
    case RegimeLabel::SynchronousOscillation: return "synchronous-oscillation";
    case RegimeLabel::StationaryChaos: return "stationary-chaos";
    case RegimeLabel::CycloStationaryChaos: return "cyclo-stationary-chaos";
    case RegimeLabel::Unclassified: return "unclassified";
  }
  return "unclassified";
}

namespace {

constexpr int kBurnIn = 100;
constexpr int kWindowEnd = 300;
constexpr int kTailStart = 200;
constexpr double kEpsQ = 1e-4;    // relative tail amplitude of q
constexpr double kPeakRatio = 10.0;
constexpr double kEpsDRel = 1e-3;  // d12 plateau, relative to max q*

// ratio of the dominant non-DC DFT magnitude to the median magnitude over
// the window [kBurnIn, kWindowEnd)
double spectral_peak_ratio(const std::vector<double>& q) {
  const int n = kWindowEnd - kBurnIn;
  double mean = 0.0;
  for (int t = 0; t < n; ++t) mean += q[kBurnIn + t] / n;
  std::vector<double> mag;
  mag.reserve(n / 2);
  for (int fbin = 1; fbin <= n / 2; ++fbin) {
    std::complex<double> acc = 0.0;
    for (int t = 0; t < n; ++t) {
      double ph = -2.0 * 3.14159265358979323846 * fbin * t / n;
      acc += (q[kBurnIn + t] - mean) * std::complex<double>(std::cos(ph),
                                                            std::sin(ph));
    }
    mag.push_back(std::abs(acc));
  }
  double peak = *std::max_element(mag.begin(), mag.end());
  std::nth_element(mag.begin(), mag.begin() + mag.size() / 2, mag.end());
  double background = std::max(mag[mag.size() / 2], 1e-300);
  return peak / background;
}

}  // namespace

RegimeLabel classify_regime(const std::array<MomentSeries, 2>& ms,
                            const std::array<TwinSeries, 2>& tw,
                            RegimeDiagnostics* diag_out) {
  if (ms[0].t_steps < kWindowEnd || ms[1].t_steps < kWindowEnd ||
      int(tw[0].d12.size()) <= kWindowEnd)
    throw std::invalid_argument(
        "regime classification needs at least 300 steps");

  RegimeDiagnostics d;
  for (int k = 0; k < 2; ++k) {
    const auto& q = ms[k].q;
    double lo = q[kTailStart], hi = q[kTailStart], mean = 0.0;
    for (int t = kTailStart; t <= kWindowEnd; ++t) {
      lo = std::min(lo, q[t]);
      hi = std::max(hi, q[t]);
      mean += q[t] / (kWindowEnd - kTailStart + 1);
    }
    d.q_star[k] = mean;
    double amp = (hi - lo) / std::max(std::abs(mean), 1e-300);
    d.osc_amplitude = std::max(d.osc_amplitude, amp);
    d.spectral_ratio = std::max(d.spectral_ratio, spectral_peak_ratio(q));
    double plateau = 0.0;
    for (int t = kTailStart; t <= kWindowEnd; ++t)
      plateau += tw[k].d12[t] / (kWindowEnd - kTailStart + 1);
    d.d12_plateau = std::max(d.d12_plateau, plateau);
  }
  if (diag_out) *diag_out = d;

  double eps_d =
      std::max(kEpsDRel * std::max(d.q_star[0], d.q_star[1]), 1e-12);
  bool decorrelated = d.d12_plateau > eps_d;
  bool settled = d.osc_amplitude <= kEpsQ;
  if (settled)
    return decorrelated ? RegimeLabel::StationaryChaos
                        : RegimeLabel::FixedPoint;
  if (d.spectral_ratio >= kPeakRatio)
    return decorrelated ? RegimeLabel::CycloStationaryChaos
                        : RegimeLabel::SynchronousOscillation;
  return RegimeLabel::Unclassified;
}

std::vector<BifurcationCell> bifurcation_map(std::span<const double> g_values,
                                             std::span<const double> d_values,
                                             const GaussHermite& gh,
                                             bool parallel) {
  const int ng = int(g_values.size()), nd = int(d_values.size());
  std::vector<BifurcationCell> cells(std::size_t(ng) * nd);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int idx = 0; idx < ng * nd; ++idx) {
    BifurcationCell& cell = cells[idx];
    cell.g = g_values[idx / nd];
    cell.d = d_values[idx % nd];
    try {
      TwoPopParams p = gd_to_params({cell.g, cell.d});
      TwoPopInitial init;
      init.m[0] = init.m[1] = 0.0;
      init.q[0] = init.q[1] = 0.01;
      double c12_0[2] = {init.q[0] * (1.0 - 1e-6), init.q[1] * (1.0 - 1e-6)};
      auto ms = propagate_two_pop(p, init, kWindowEnd, gh, false);
      auto tw = two_pop_twin_series(p, init, c12_0, kWindowEnd, gh);
      cell.label = classify_regime(ms, tw, &cell.diag);
      cell.ok = true;
    } catch (const std::exception&) {
      // a cell failure must not escape the parallel region
      cell.ok = false;
    }
  }
  return cells;
}

}  // namespace rrnn
