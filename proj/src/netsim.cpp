#include "rrnn/netsim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rrnn {

namespace {

inline void activations(const NetworkConfig& cfg, const double* u_t,
                        double* x) {
  for (int j = 0; j < cfg.n; ++j) x[j] = cfg.f(u_t[j]);
}

inline double recurrent_base(const NetworkConfig& cfg, double u_ti) {
  if (cfg.model.kind == NeuronKind::IF)
    return if_leak(cfg.model.gamma, cfg.model.reset, cfg.theta,
                   u_ti + cfg.theta);
  return 0.0;
}

void check_finite(const double* u, int n, int t) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(u[i]))
      throw std::runtime_error("non-finite potential for neuron " +
                               std::to_string(i) + " at step " +
                               std::to_string(t));
}

}  // namespace

void step_potentials(const NetworkConfig& cfg, const double* weights,
                     const double* u_t, const double* noise, double* x_scratch,
                     double* u_next) {
  const int n = cfg.n;
  activations(cfg, u_t, x_scratch);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* row = weights + std::size_t(i) * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += row[j] * x_scratch[j];
    u_next[i] = recurrent_base(cfg, u_t[i]) + acc + noise[i] - cfg.theta;
  }
}

void step_potentials_serial(const NetworkConfig& cfg, const double* weights,
                            const double* u_t, const double* noise,
                            double* x_scratch, double* u_next) {
  const int n = cfg.n;
  activations(cfg, u_t, x_scratch);
  for (int i = 0; i < n; ++i) {
    const double* row = weights + std::size_t(i) * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += row[j] * x_scratch[j];
    u_next[i] = recurrent_base(cfg, u_t[i]) + acc + noise[i] - cfg.theta;
  }
}

std::vector<double> sample_initial(const NetworkConfig& cfg,
                                   uint64_t realization) {
  RngStream rng(cfg.seed, stream_id(StreamPurpose::Init, realization));
  std::vector<double> u0(cfg.n, cfg.init.mean);
  if (cfg.init.std > 0.0)
    for (int i = 0; i < cfg.n; ++i) u0[i] += cfg.init.std * rng.normal();
  return u0;
}

TrajectoryEnsemble simulate_with_weights(const NetworkConfig& cfg,
                                         const double* weights,
                                         const std::vector<double>& u0,
                                         uint64_t realization,
                                         uint32_t noise_copy) {
  validate(cfg);
  TrajectoryEnsemble tr;
  tr.n = cfg.n;
  tr.t_steps = cfg.t_steps;
  tr.u.assign(std::size_t(cfg.t_steps + 1) * cfg.n, 0.0);
  std::copy(u0.begin(), u0.end(), tr.frame(0));

  RngStream noise_rng(cfg.seed,
                      stream_id(StreamPurpose::Noise, realization * 4 + noise_copy));
  std::vector<double> noise(cfg.n), x(cfg.n);
  for (int t = 0; t < cfg.t_steps; ++t) {
    if (cfg.sigma > 0.0)
      for (int i = 0; i < cfg.n; ++i) noise[i] = cfg.sigma * noise_rng.normal();
    else
      std::fill(noise.begin(), noise.end(), 0.0);
    step_potentials(cfg, weights, tr.frame(t), noise.data(), x.data(),
                    tr.frame(t + 1));
    check_finite(tr.frame(t + 1), cfg.n, t + 1);
  }
  return tr;
}

TrajectoryEnsemble simulate(const NetworkConfig& cfg, uint64_t realization) {
  validate(cfg);
  RngStream wrng(cfg.seed, stream_id(StreamPurpose::Weights, realization));
  auto w = sample_weights(cfg.weights, cfg.n, wrng);
  auto u0 = sample_initial(cfg, realization);
  return simulate_with_weights(cfg, w.data(), u0, realization, 0);
}

EmpiricalMoments empirical_moments(const NetworkConfig& cfg,
                                   const TrajectoryEnsemble& traj) {
  const auto* law = std::get_if<GaussianWeights>(&cfg.weights);
  if (!law)
    throw std::invalid_argument(
        "empirical field moments are defined for Gaussian coupling laws");
  const int n = traj.n, T = traj.t_steps;
  EmpiricalMoments em;
  em.t_steps = T;
  em.m.assign(T + 1, 0.0);
  em.q.assign(T + 1, 0.0);
  em.c = SymMat(T + 1);
  em.u_mean.assign(T + 1, 0.0);
  em.u_var.assign(T + 1, 0.0);

  std::vector<double> act(std::size_t(T) * n);  // f(u(t)) for t in 0..T-1
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      act[std::size_t(t) * n + i] = cfg.f(traj.at(t, i));

  for (int t = 0; t <= T; ++t) {
    std::span<const double> frame(traj.frame(t), std::size_t(n));
    em.u_mean[t] = mean(frame);
    em.u_var[t] = variance(frame);
  }
  em.m[0] = em.u_mean[0];
  em.q[0] = em.u_var[0];

  std::vector<double> buf(n);
  for (int s = 0; s < T; ++s) {
    const double* as = act.data() + std::size_t(s) * n;
    for (int t = s; t < T; ++t) {
      const double* at = act.data() + std::size_t(t) * n;
      for (int i = 0; i < n; ++i) buf[i] = as[i] * at[i];
      double v = law->j2 * mean(buf);
      em.c.set_sym(s + 1, t + 1, v);
    }
    em.q[s + 1] = em.c(s + 1, s + 1);
    em.m[s + 1] =
        law->jbar * mean(std::span<const double>(as, std::size_t(n)));
  }
  return em;
}

TwinResult twin_run(const NetworkConfig& cfg, TwinCoupling coupling,
                    double delta, uint64_t realization) {
  validate(cfg);
  RngStream wrng(cfg.seed, stream_id(StreamPurpose::Weights, realization));
  auto w = sample_weights(cfg.weights, cfg.n, wrng);
  auto u0 = sample_initial(cfg, realization);

  std::vector<double> u0b = u0;
  if (delta != 0.0) {
    RngStream prng(cfg.seed, stream_id(StreamPurpose::Perturb, realization));
    for (int i = 0; i < cfg.n; ++i) u0b[i] += delta * prng.normal();
  }

  TwinResult r;
  r.a = simulate_with_weights(cfg, w.data(), u0, realization, 0);
  uint32_t copy_b = coupling == TwinCoupling::SameNoise ? 0 : 1;
  r.b = simulate_with_weights(cfg, w.data(), u0b, realization, copy_b);

  const int n = cfg.n, T = cfg.t_steps;
  r.d.assign(T + 1, 0.0);
  r.c12.assign(T + 1, 0.0);
  std::vector<double> buf(n);
  double j2 = 0.0;
  if (const auto* law = std::get_if<GaussianWeights>(&cfg.weights))
    j2 = law->j2;
  for (int t = 0; t <= T; ++t) {
    for (int i = 0; i < n; ++i) {
      double g = r.a.at(t, i) - r.b.at(t, i);
      buf[i] = g * g;
    }
    r.d[t] = mean(buf);
    if (t >= 1 && j2 > 0.0) {
      for (int i = 0; i < n; ++i)
        buf[i] = cfg.f(r.a.at(t - 1, i)) * cfg.f(r.b.at(t - 1, i));
      r.c12[t] = j2 * mean(buf);
    }
  }
  return r;
}

TwoPopSimResult simulate_two_pop(const TwoPopNetConfig& cfg,
                                 uint64_t realization) {
  if (cfg.n <= 1 || cfg.lambda <= 0.0 || cfg.lambda >= 1.0)
    throw std::invalid_argument("two-population sizes must both be positive");
  const int n = cfg.n;
  const int n1 = int(std::lround(cfg.lambda * n));
  const int n2 = n - n1;
  if (n1 <= 0 || n2 <= 0)
    throw std::invalid_argument("two-population sizes must both be positive");
  const int nk[2] = {n1, n2};
  const int off[2] = {0, n1};

  // block-structured Gaussian couplings, per-source-population 1/n_j scaling
  RngStream wrng(cfg.seed, stream_id(StreamPurpose::Weights, realization));
  std::vector<double> w(std::size_t(n) * n);
  for (int i = 0; i < n; ++i) {
    int k = i < n1 ? 0 : 1;
    double* row = w.data() + std::size_t(i) * n;
    for (int jp = 0; jp < 2; ++jp) {
      double m = cfg.jbar[k][jp] / nk[jp];
      double s = std::sqrt(cfg.j2[k][jp] / nk[jp]);
      for (int j = off[jp]; j < off[jp] + nk[jp]; ++j)
        row[j] = m + s * wrng.normal();
    }
  }

  RngStream irng(cfg.seed, stream_id(StreamPurpose::Init, realization));
  std::vector<double> u(n), unext(n), x(n), noise(n);
  for (int i = 0; i < n; ++i) {
    int k = i < n1 ? 0 : 1;
    u[i] = cfg.init[k].mean + cfg.init[k].std * irng.normal();
  }

  TwoPopSimResult res;
  res.n1 = n1;
  res.n2 = n2;
  for (int k = 0; k < 2; ++k) {
    res.m[k].assign(cfg.t_steps + 1, 0.0);
    res.q[k].assign(cfg.t_steps + 1, 0.0);
  }

  RngStream nrng(cfg.seed, stream_id(StreamPurpose::Noise, realization * 4));
  std::vector<double> ef(2), ef2(2);
  for (int t = 0; t < cfg.t_steps; ++t) {
    // plug-in field moments from activations at time t
    for (int k = 0; k < 2; ++k) {
      double s1 = 0.0, s2 = 0.0;
      for (int j = off[k]; j < off[k] + nk[k]; ++j) {
        double a = cfg.f(u[j]);
        s1 += a;
        s2 += a * a;
      }
      ef[k] = s1 / nk[k];
      ef2[k] = s2 / nk[k];
    }
    for (int k = 0; k < 2; ++k) {
      res.m[k][t + 1] = cfg.jbar[k][0] * ef[0] + cfg.jbar[k][1] * ef[1];
      res.q[k][t + 1] = cfg.j2[k][0] * ef2[0] + cfg.j2[k][1] * ef2[1];
    }

    for (int j = 0; j < n; ++j) x[j] = cfg.f(u[j]);
    for (int i = 0; i < n; ++i)
      noise[i] = cfg.sigma > 0.0 ? cfg.sigma * nrng.normal() : 0.0;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      const double* row = w.data() + std::size_t(i) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += row[j] * x[j];
      int k = i < n1 ? 0 : 1;
      unext[i] = acc + noise[i] - cfg.theta[k];
    }
    std::swap(u, unext);
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(u[i]))
        throw std::runtime_error("non-finite potential at step " +
                                 std::to_string(t + 1));
  }
  return res;
}

}  // namespace rrnn
