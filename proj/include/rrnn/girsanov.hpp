#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rrnn/model.hpp"
#include "rrnn/netsim.hpp"
#include "rrnn/transfer.hpp"

namespace rrnn {

// Single-neuron trajectory law over t = 0..t_steps.  The free law P is the
// network law with all couplings removed: eta(0) ~ init and
//   AF/BF: eta(t+1) = -theta + sigma w(t+1),
//   IF:    eta(t+1) = if_leak(eta(t) + theta) - theta + sigma w(t+1),
// with w i.i.d. standard normal.  The transfer function only enters through
// the field statistics built from samples.
struct TrajectoryLaw {
  NeuronModel model;
  TransferFunction f;
  InitialLaw init{0.0, 1.0};
  double theta = 0.0;
  double sigma = 1.0;
  int t_steps = 3;
};

void validate(const TrajectoryLaw& law);

// Gaussian law of the frozen input field (v(1), ..., v(t_steps)).  mean has
// t_steps entries and cov is t_steps x t_steps, indexed by arrival time - 1.
struct GaussianFieldLaw {
  int t_steps = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Field law generated by a measure mu given through a particle sample:
//   mean(t)   = jbar E_mu[f(eta(t))]
//   cov(s, t) = j2   E_mu[f(eta(s)) f(eta(t))]   (uncentered, so PSD).
// Throws if the empirical covariance dips below the PSD floor -1e-10.
GaussianFieldLaw gmu_from_sample(const TrajectoryEnsemble& sample, double jbar,
                                 double j2, const TransferFunction& f);

// log dL(mu)/dP evaluated at one path eta (length t_steps + 1), where L(mu)
// is the free law driven by an additional frozen field v ~ g.  The Gaussian
// integral over v is carried out in closed form via a Cholesky factor of
// cov + 1e-10 I; failure to factor reports the covariance eigenvalue range.
double log_density_L(const GaussianFieldLaw& g, const TrajectoryLaw& law,
                     std::span<const double> eta);

// Gamma(mu) = E_mu[log dL(mu)/dP], estimated on the same sample that defines
// g_mu.  Fixed points of mu -> L(mu) make this the network free entropy rate.
double gamma_functional(const TrajectoryEnsemble& mu_sample,
                        const TrajectoryLaw& law, double jbar, double j2);

// log dQ_N/dP^{x N} at a network trajectory u of n neurons: n Gamma(mu_u)
// with mu_u the empirical path measure of u.
double network_log_density(const TrajectoryEnsemble& u,
                           const TrajectoryLaw& law, double jbar, double j2);

// Monte Carlo estimate of the relative entropy I(nu, P) = E_nu[log dL/dP]
// for a law nu given by a sample, against the field law g built from nu.
// Only laws of the form L(g) are supported; g must carry law.t_steps times.
double relative_entropy_estimate(const GaussianFieldLaw& g_of_nu,
                                 const TrajectoryLaw& law,
                                 const TrajectoryEnsemble& sample_from_nu);

// m independent paths of the free law P (replica i uses its own stream).
TrajectoryEnsemble sample_free(const TrajectoryLaw& law, int m, uint64_t seed);

// m independent paths of L(g): each replica freezes one field draw v ~ g and
// adds fresh step noise.
TrajectoryEnsemble sample_propagated(const GaussianFieldLaw& g,
                                     const TrajectoryLaw& law, int m,
                                     uint64_t seed);

// log dQ/dP for the scalar pair x(t+1) = phi(x(t)) + w(t+1) under P and
// y(t+1) = psi(y(t)) + w(t+1) under Q, shared w ~ N(alpha, k_var) i.i.d. and
// shared initial condition; eta holds the path at t = 0..T.
double scalar_girsanov_log_density(const std::function<double(double)>& phi,
                                   const std::function<double(double)>& psi,
                                   double alpha, double k_var,
                                   std::span<const double> eta);

}  // namespace rrnn
