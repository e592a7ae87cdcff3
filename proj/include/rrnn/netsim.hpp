#pragma once
#include <cstdint>
#include <vector>

#include "rrnn/model.hpp"
#include "rrnn/util.hpp"

namespace rrnn {

// Potentials stored time-major: u(t, i) for t in 0..t_steps, i in 0..n-1.
struct TrajectoryEnsemble {
  int n = 0;
  int t_steps = 0;
  std::vector<double> u;

  double at(int t, int i) const { return u[std::size_t(t) * n + i]; }
  const double* frame(int t) const { return u.data() + std::size_t(t) * n; }
  double* frame(int t) { return u.data() + std::size_t(t) * n; }
};

// One synchronous update u(t) -> u(t+1).  x_scratch must hold n doubles; it
// receives the activations f(u_t).  The OpenMP version parallelizes over
// rows with each row reduced in index order, so it is bit-identical to the
// serial reference for any thread count.
void step_potentials(const NetworkConfig& cfg, const double* weights,
                     const double* u_t, const double* noise, double* x_scratch,
                     double* u_next);
void step_potentials_serial(const NetworkConfig& cfg, const double* weights,
                            const double* u_t, const double* noise,
                            double* x_scratch, double* u_next);

// Quenched-disorder run: weights and initial conditions are drawn once from
// streams keyed by (seed, purpose, realization), noise per step.  Throws on
// non-finite potentials with the offending step in the message.
TrajectoryEnsemble simulate(const NetworkConfig& cfg, uint64_t realization = 0);

// Same dynamics with externally supplied weights (shared by twin runs and by
// the two-population block simulator).  noise_copy selects the noise stream.
TrajectoryEnsemble simulate_with_weights(const NetworkConfig& cfg,
                                         const double* weights,
                                         const std::vector<double>& u0,
                                         uint64_t realization,
                                         uint32_t noise_copy);

std::vector<double> sample_initial(const NetworkConfig& cfg,
                                   uint64_t realization);

// Empirical order parameters of one realization.  For t >= 1 these are the
// plug-in field statistics m(t+1) = jbar <f(u(t))>, c(s+1, t+1) =
// j2 <f(u(s)) f(u(t))>, the finite-size counterparts of the mean-field
// moment series (index 0 again holds raw initial-potential mean/variance).
// Defined for Gaussian coupling laws.
struct EmpiricalMoments {
  int t_steps = 0;
  std::vector<double> m, q;
  SymMat c;
  std::vector<double> u_mean, u_var;  // raw potential statistics, all t
};

EmpiricalMoments empirical_moments(const NetworkConfig& cfg,
                                   const TrajectoryEnsemble& traj);

enum class TwinCoupling { SameNoise, IndependentNoise };

// Two copies on the same coupling matrix; copy b starts at u0 + delta * z
// with z standard normal.  d(t) is the mean squared gap, c12(t) the plug-in
// cross-covariance of the two synaptic fields (t >= 1).
struct TwinResult {
  TrajectoryEnsemble a, b;
  std::vector<double> d;
  std::vector<double> c12;
};

TwinResult twin_run(const NetworkConfig& cfg, TwinCoupling coupling,
                    double delta, uint64_t realization = 0);

// Two interacting populations with block-structured Gaussian couplings:
// block (k, j) entries are N(jbar[k][j] / n_j, j2[k][j] / n_j) so that the
// population field variances follow the summed mean-field recursion.
struct TwoPopNetConfig {
  TransferFunction f;
  int n = 0;
  double lambda = 0.5;  // fraction of neurons in population 1
  double jbar[2][2] = {{0, 0}, {0, 0}};
  double j2[2][2] = {{0, 0}, {0, 0}};
  double theta[2] = {0, 0};
  double sigma = 0.0;
  int t_steps = 0;
  uint64_t seed = 0;
  InitialLaw init[2];
};

struct TwoPopSimResult {
  int n1 = 0, n2 = 0;
  std::vector<double> m[2], q[2];  // plug-in field moments per population
};

TwoPopSimResult simulate_two_pop(const TwoPopNetConfig& cfg,
                                 uint64_t realization = 0);

}  // namespace rrnn
