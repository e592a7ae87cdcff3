#pragma once
#include <cstdint>
#include <span>
#include <vector>

namespace rrnn {

// Sparsely connected inhibitory integrate-and-fire network in continuous
// time, treated in the diffusion approximation.  Potentials relax toward
// the external drive with time constant tau; each presynaptic spike kicks
// the potential by -j after a transmission delay; reaching theta resets the
// potential to `reset` with zero refractory time.
//
// Unit convention (self-consistent across the rate equation, the density
// solver, the evolution scheme, and the spiking simulator): the density
// obeys  tau dp/dt = (sigma(t)^2/2) p'' + ((u - mu(t)) p)'  with
//   mu(t)      = mu_ext - c j tau nu(t - delay)
//   sigma(t)^2 = sigma_ext^2 + c j^2 tau nu(t - delay),
// equivalent to the per-neuron SDE du = ((mu - u)/tau) dt + (sigma/sqrt(tau)) dB.
struct IFContinuousParams {
  double tau = 20.0;       // membrane time constant
  double theta = 20.0;     // firing threshold
  double reset = 10.0;     // reset potential, 0 < reset < theta
  double j = 0.1;          // inhibitory pulse size
  int fan_in = 1000;       // presynaptic contacts per neuron (c)
  double delay = 2.0;      // synaptic transmission delay
  double mu_ext = 25.0;    // external drive mean
  double sigma_ext = 1.0;  // external drive dispersion, in density units
};

void validate(const IFContinuousParams& p);

// Drift-diffusion moments of c_ext superposed independent Poisson inputs of
// size j_ext at rate nu_ext each: mu = j_ext c_ext nu_ext,
// sigma = j_ext sqrt(c_ext nu_ext).
struct DriveMoments {
  double mu = 0.0;
  double sigma = 0.0;
};
DriveMoments external_input_moments(double j_ext, double c_ext,
                                    double nu_ext);

// The normalization integral R(y_theta, y_reset) with
// y_x = (x - mu0)/sigma0; the stationary rate satisfies nu0 tau = 1/R.
//   R = int_0^inf exp(-y^2) [exp(2 y_theta y) - exp(2 y_reset y)] / y dy
// The integrand is replaced by its y -> 0 limit 2 (y_theta - y_reset)
// below y = 1e-6.  Throws std::overflow_error once exp(y_theta^2)
// overflows the integrand scale (y_theta > 26: the rate is numerically
// zero and no self-consistent solution is representable).
double rate_integral(double y_theta, double y_reset);

// Weak-noise escape approximation nu0 tau ~ (y_theta/sqrt(pi)) e^{-y_theta^2},
// valid for y_theta >> 1 (rare spikes).
double weak_noise_rate(double y_theta);

struct StationaryRate {
  double nu0 = 0.0;
  double mu0 = 0.0, sigma0 = 0.0;
  double y_theta = 0.0, y_reset = 0.0;
  double residual = 0.0;  // |1 - nu0 tau R| at the returned root
  int iterations = 0;
};

// Solves the coupled stationary system
//   mu0 = mu_ext - c j nu0 tau,  sigma0^2 = sigma_ext^2 + c j^2 nu0 tau,
//   nu0 tau R(y_theta, y_reset) = 1
// by bracketed bisection on nu0.  1/(nu tau) - R is positive as nu -> 0
// and negative once inhibition drives the threshold far above the drive,
// so a geometric scan always brackets the root when one exists.  Throws
// std::runtime_error with the scan table if no sign change is found and
// std::domain_error when sigma0 degenerates (sigma_ext = 0 at low rate).
StationaryRate selfconsistent_rate(const IFContinuousParams& p);

struct StationaryDensity {
  std::vector<double> u, p;  // nodes (last node = theta, p = 0 there)
  double mass = 0.0;         // grid integral of the raw solution
  double flux_rate = 0.0;    // rate implied by the outgoing flux at theta
};

// Stationary density for given (mu0, sigma0, nu0): backward integration of
// the constant-flux form  sigma0^2/2 p' + (u - mu0) p = -nu0 tau [u > reset]
// from p(theta) = 0 (the flux below the reset point is zero; the absorbed
// flux reenters at the reset point, which shows up as a derivative jump).
// Backward is the stable direction: the homogeneous solution grows with
// the desired one.  The returned density is NOT renormalized: mass = 1
// within grid accuracy certifies that nu0 closes the self-consistency.
StationaryDensity stationary_density(double mu0, double sigma0, double nu0,
                                     double tau, double theta, double reset,
                                     int cells = 4000, double span = 8.0);

// Same solve evaluated at caller-supplied ascending points (all <= theta).
std::vector<double> stationary_density_at(double mu0, double sigma0,
                                          double nu0, double tau,
                                          double theta, double reset,
                                          std::span<const double> u);

struct FPEvolveConfig {
  double duration = 50.0;    // same units as tau
  double dt = 0.0;           // 0: 0.2 tau h^2 / sigma^2, then delay-quantized
  double nu_history = 0.0;   // rate history seeding nu(t - delay) at t <= 0
  double kick = 0.0;         // relative perturbation applied to the history
  double sigma_headroom = 3.0;  // auto-dt budgets sigma^2 at this multiple of
                                // nu_history; raise it when the rate swings hard
};

struct FPEvolveResult {
  std::vector<double> nu;   // firing rate per step (size steps + 1, nu[0] = history)
  std::vector<double> p;    // final cell averages
  double dt = 0.0;
  int steps = 0;
  double mass_error = 0.0;  // max |mass(t) - mass(0)| over the run
};

// Conservative finite-volume evolution of the density on uniform cells
// (centers u, top face exactly at theta, reflecting bottom face).  The
// outgoing flux at theta is the instantaneous firing rate; it is reinjected
// into the cell containing the reset point within the same step, so total
// mass is conserved to rounding.  The delayed rate closes mu(t), sigma(t).
// Throws on CFL violation (sigma grew past the chosen step's margin), on
// negative density beyond rounding, and on mass drift > 1e-4.
FPEvolveResult fp_evolve(const IFContinuousParams& p,
                         std::span<const double> u,
                         std::span<const double> p0,
                         const FPEvolveConfig& cfg);

// Uniform cell centers with top face at theta: u_i = u_min + (i + 1/2) h,
// h = (theta - u_min)/cells.
std::vector<double> fp_cells(double u_min, double theta, int cells);

struct SpikingConfig {
  int n = 10000;
  double duration = 2000.0;  // same units as tau
  double dt = 0.0;           // 0: min(tau/50, delay), then delay-quantized
  double burn_in = 0.0;      // excluded from the mean rate
  double bin = 0.0;          // rate bin width; 0: tau/4
  uint64_t seed = 0;
  double u0_min = 0.0, u0_max = 0.0;  // initial potentials uniform in
                                      // [u0_min, u0_max]; both 0: [reset, theta)
};

struct SpikingRunResult {
  std::vector<std::vector<double>> spikes;  // per-neuron times, increasing
  std::vector<double> rate_t, rate;         // binned population rate
  double mean_rate = 0.0;                   // over [burn_in, duration]
  double dt = 0.0;
};

// Euler-Maruyama integration of the per-neuron SDE with fixed in-degree
// connectivity (fan_in distinct presynaptic sources per neuron, weight -j),
// pulse delivery quantized to the step grid after `delay`, threshold
// crossing resetting theta -> reset with zero refractory time.  Noise is
// counter-based per (neuron, step), so the update loop parallelizes with
// bit-identical results.  Throws on numerical blow-up with the time index.
SpikingRunResult simulate_spiking(const IFContinuousParams& p,
                                  const SpikingConfig& cfg);

enum class DriveLabel { Stationary, Oscillatory };

struct DriveCell {
  double mu_ext = 0.0, sigma_ext = 0.0;
  DriveLabel label = DriveLabel::Stationary;
  double nu0 = 0.0;       // self-consistent rate of the cell
  double amplitude = 0.0; // relative rate oscillation over the tail window
  bool ok = false;        // false: no stationary solution or evolution failed
};

// Classifies the long-run density dynamics over a grid of external drives:
// evolve from the stationary solution with a small kick on the rate
// history; the cell is Oscillatory when the relative rate amplitude over
// the final third exceeds 5%.  Cells run in parallel.
std::vector<DriveCell> drive_response_map(const IFContinuousParams& base,
                                          std::span<const double> mu_values,
                                          std::span<const double> sigma_values,
                                          double duration = 30.0,
                                          bool parallel = true);

}  // namespace rrnn
