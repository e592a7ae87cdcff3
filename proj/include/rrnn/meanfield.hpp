#pragma once
#include <span>
#include <vector>

#include "rrnn/quadrature.hpp"
#include "rrnn/transfer.hpp"
#include "rrnn/util.hpp"

namespace rrnn {

// One-population mean-field parameters for the analog network with Gaussian
// couplings of mean jbar/n and variance j2/n.
struct MeanFieldParams {
  double jbar = 0.0;
  double j2 = 1.0;
  double theta = 0.0;
  double sigma = 0.0;
  TransferFunction f;
};

// Order parameters of the self-consistent Gaussian field.  For t >= 1 the
// potential at time t is distributed as N(m[t] - theta, q[t] + sigma^2);
// index 0 stores the initial potential law (mean, variance) instead, and row
// and column 0 of c are unused because the initial coordinate is independent
// of the field under the mean-field law.
struct MomentSeries {
  int t_steps = 0;
  std::vector<double> m, q;  // size t_steps + 1
  SymMat c;                  // c(s, t), s, t in 1..t_steps
};

// with_covariance = false computes only m and q (the covariance recursion is
// quadratic in t_steps and often unneeded); c is then left empty.  The rule
// gh is refined internally whenever the field scale outgrows it (see
// refined_for_scale); for Heaviside transfers no refinement helps and the
// accuracy is limited by the rule's resolution of the jump.
MomentSeries propagate_moments(const MeanFieldParams& p, double u0_mean,
                               double u0_var, int t_steps,
                               const GaussHermite& gh,
                               bool with_covariance = true);

// Scaled variance map h(q) = E[f(sqrt(j2 q) xi - theta)^2]; its fixed point
// is the stationary field variance in units of j2 (balanced couplings,
// vanishing noise).
double q_map(double q, double j2, double theta, const TransferFunction& f,
             const GaussHermite& gh);

struct FixedPointResult {
  double q_star = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Picard iteration with a bisection fallback on [0, max(1, j2/2)].
FixedPointResult fixed_point_q(double j2, double theta,
                               const TransferFunction& f,
                               const GaussHermite& gh, double tol = 1e-10);

// Scaled covariance map H(c) at the stationary variance q_star; H(q_star) =
// q_star, and the slope at that point decides between local stability of the
// fully correlated state and chaotic decorrelation.
double covariance_map(double c, double q_star, double j2, double theta,
                      const TransferFunction& f, const GaussHermite& gh);

struct StabilityResult {
  double multiplier = 0.0;           // one-sided finite difference of H at q*
  double multiplier_analytic = 0.0;  // j2 E[f'(sqrt(j2 q*) xi - theta)^2]
};

// The finite-difference value is authoritative; c = q* is the edge of the
// admissible covariance domain, so the stencil is one-sided (second order).
StabilityResult stability_multiplier(double j2, double theta, double q_star,
                                     const TransferFunction& f,
                                     const GaussHermite& gh);

struct CovFixedPointResult {
  double c_star = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Probes H just below q_star: if the diagonal is not yet crossed there the
// fully correlated point attracts and c* = q*; otherwise the second crossing
// is bracketed in [0, q*) and found by bisection.
CovFixedPointResult covariance_fixed_point(double j2, double theta,
                                           double q_star,
                                           const TransferFunction& f,
                                           const GaussHermite& gh,
                                           double tol = 1e-12);

// Two copies of the same network driven by independent noise realizations:
// c12 is the instantaneous cross-covariance of the two synaptic fields, d12
// the mean squared distance between the two potential fields,
// d12 = 2 (q + sigma^2) - 2 c12 for identical marginals.
struct TwinSeries {
  std::vector<double> c12, d12;  // size t_steps + 1
};

TwinSeries cross_covariance_series(const MeanFieldParams& p, double u0_mean,
                                   double u0_var, double c12_0, int t_steps,
                                   const GaussHermite& gh);

struct ChaosSurfaceCell {
  double j2 = 0.0, theta = 0.0;
  double q_star = 0.0, c_star = 0.0;
  double gap = 0.0;        // q* - c*, positive past the transition
  double multiplier = 0.0;
  bool converged = false;
};

std::vector<ChaosSurfaceCell> chaos_surface(std::span<const double> j2_values,
                                            std::span<const double> theta_values,
                                            const TransferFunction& f,
                                            const GaussHermite& gh,
                                            bool parallel = true);

}  // namespace rrnn
