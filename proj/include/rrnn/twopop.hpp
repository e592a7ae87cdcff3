#pragma once
#include <array>
#include <span>
#include <vector>

#include "rrnn/meanfield.hpp"

namespace rrnn {

// Block-coupled pair of populations sharing one synaptic noise level.  The
// population fraction lambda enters only the finite-size block simulator;
// the mean-field maps depend on the block statistics alone.  Index order is
// [target][source].
struct TwoPopParams {
  double lambda = 0.5;  // population-1 fraction, in (0,1)
  double jbar[2][2] = {};
  double j2[2][2] = {};  // coupling variances, >= 0
  double theta[2] = {0.0, 0.0};
  double sigma = 0.0;
  TransferFunction f;
};

void validate(const TwoPopParams& p);

// g scales the couplings (and through them the effective nonlinearity of the
// loop), d differentiates the excitatory and inhibitory populations.
struct GDPoint {
  double g = 1.0;  // > 0
  double d = 0.0;  // >= 0
};

// (g, d) slice of the excitatory/inhibitory family: population 1 projects
// onto both populations with mean gd and variance g^2, population 2 projects
// onto population 1 with mean -2gd and variance 2 g^2 and is silent onto
// itself.  The couplings are the gain-g transfer family f(g u) expressed
// against a unit-slope transfer, so the inhibitory threshold (0.3 neuron
// units) scales with g alongside them; thresholds are (0, 0.3 g).
TwoPopParams gd_to_params(const GDPoint& pt);

struct TwoPopInitial {
  double m[2] = {0.0, 0.0};
  double q[2] = {0.0, 0.0};  // >= 0
};

// Forward recursion of the per-population field moments.  Each population's
// potential at t >= 1 is Gaussian N(m_k(t) - theta_k, q_k(t) + sigma^2) and
// the two populations are independent, so each target accumulates its
// sources' activation statistics weighted by the block coefficients.  The
// covariance recursion follows each source population's own two-time law
// (the target index never enters the integrands), which keeps
// c_k(t, t) = q_k(t) and collapses to the one-population recursion when the
// blocks coincide.  with_covariance = false skips the O(T^2) part.
std::array<MomentSeries, 2> propagate_two_pop(const TwoPopParams& p,
                                              const TwoPopInitial& init,
                                              int t_steps,
                                              const GaussHermite& gh,
                                              bool with_covariance = true);

// Cross-covariance and mean quadratic distance between two mean-field
// trajectories on the same disorder, per population; the dynamic noise is
// independent between the copies.  c12_0 perturbs the initial correlation
// (|c12_0[k]| <= q_k(0)).
std::array<TwinSeries, 2> two_pop_twin_series(const TwoPopParams& p,
                                              const TwoPopInitial& init,
                                              const double (&c12_0)[2],
                                              int t_steps,
                                              const GaussHermite& gh);

enum class RegimeLabel {
  FixedPoint,
  SynchronousOscillation,
  StationaryChaos,
  CycloStationaryChaos,
  Unclassified,
};

const char* to_string(RegimeLabel label);

struct RegimeDiagnostics {
  double q_star[2] = {0.0, 0.0};  // window means of q_k
  double osc_amplitude = 0.0;     // max_k relative q_k swing over the tail
  double spectral_ratio = 0.0;    // max_k dominant DFT peak over background
  double d12_plateau = 0.0;       // max_k tail mean of d12_k
};

// Label a propagated series by two independent diagnostics: whether the
// order parameters q_k settle (relative tail amplitude vs 1e-4, with a
// dominant spectral peak >= 10x the median background declaring a periodic
// orbit), and whether perturbed twin trajectories re-converge (tail d12 vs
// 1e-3 max q*).  Needs t_steps >= 300: burn-in 100, spectral window
// [100, 300), tail window [200, 300].  A series that neither settles nor
// shows a clean peak is reported Unclassified rather than guessed.
RegimeLabel classify_regime(const std::array<MomentSeries, 2>& ms,
                            const std::array<TwinSeries, 2>& tw,
                            RegimeDiagnostics* diag_out = nullptr);

struct BifurcationCell {
  double g = 0.0, d = 0.0;
  RegimeLabel label = RegimeLabel::Unclassified;
  RegimeDiagnostics diag;
  bool ok = false;  // false if the cell's solver threw
};

// Classify every (g, d) cell of the grid at the standard horizon (300 steps
// from a weakly scattered start).  Cells are independent and run in
// parallel; a cell failure is recorded, never thrown.
std::vector<BifurcationCell> bifurcation_map(std::span<const double> g_values,
                                             std::span<const double> d_values,
                                             const GaussHermite& gh,
                                             bool parallel = true);

}  // namespace rrnn
