#include "rrnn/girsanov.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrnn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

std::string eig_range(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  return "eigenvalues in [" + sci(es.eigenvalues().minCoeff()) + ", " +
         sci(es.eigenvalues().maxCoeff()) + "]";
}

void check_horizon(const GaussianFieldLaw& g, int t) {
  if (g.t_steps != t || g.mean.size() != t || g.cov.rows() != t ||
      g.cov.cols() != t)
    throw std::invalid_argument(
        "field law horizon does not match the trajectory law (" +
        std::to_string(g.t_steps) + " vs " + std::to_string(t) + " steps)");
}

// Lower Cholesky factor of cov + 1e-10 I.  The jitter keeps degenerate but
// valid fields (zero coupling, rank-deficient Gram) factorizable; a genuine
// indefinite matrix still fails and gets reported by eigenvalue range.
MatrixXd field_chol(const GaussianFieldLaw& g, int t) {
  check_horizon(g, t);
  MatrixXd jittered =
      g.cov + 1e-10 * MatrixXd::Identity(g.cov.rows(), g.cov.cols());
  Eigen::LLT<MatrixXd> llt(jittered);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("field covariance cannot be factored; " +
                             eig_range(g.cov));
  return llt.matrixL();
}

// Path-independent pieces of log dL(g)/dP.  Integrating the frozen field
// xi ~ N(m, L L^T) out of exp[(Phi . xi - |xi|^2 / 2) / sigma^2] gives
//   log dL/dP = (Phi . m - |m|^2 / 2) / sigma^2 - log det(I + A) / 2
//               + b . (I + A)^{-1} b / 2,
// with A = L^T L / sigma^2 and b = L^T (Phi - m) / sigma^2.
struct FieldCache {
  VectorXd mean;
  MatrixXd lt;               // L^T
  Eigen::LLT<MatrixXd> cap;  // I + A
  double half_logdet = 0.0;
  double inv_s2 = 0.0;
};

FieldCache prepare(const GaussianFieldLaw& g, const TrajectoryLaw& law) {
  const int t = law.t_steps;
  FieldCache fc;
  fc.lt = field_chol(g, t).transpose();
  fc.mean = g.mean;
  fc.inv_s2 = 1.0 / (law.sigma * law.sigma);
  MatrixXd cap = MatrixXd::Identity(t, t) +
                 fc.inv_s2 * (fc.lt * fc.lt.transpose());
  fc.cap.compute(cap);
  if (fc.cap.info() != Eigen::Success)
    throw std::runtime_error("field resolvent cannot be factored; " +
                             eig_range(cap));
  for (int k = 0; k < t; ++k)
    fc.half_logdet += std::log(fc.cap.matrixLLT()(k, k));
  return fc;
}

// Phi(k) is the step-(k+1) innovation the frozen field has to explain:
// eta(k+1) + theta minus the deterministic leak for the IF map.
void fill_phi(const TrajectoryLaw& law, std::span<const double> eta,
              VectorXd& phi) {
  const bool leaky = law.model.kind == NeuronKind::IF;
  for (int k = 0; k < law.t_steps; ++k) {
    const double base = leaky ? if_leak(law.model.gamma, law.model.reset,
                                        law.theta, eta[k] + law.theta)
                              : 0.0;
    phi[k] = eta[k + 1] + law.theta - base;
  }
}

double eval_log_density(const FieldCache& fc, const TrajectoryLaw& law,
                        std::span<const double> eta, VectorXd& phi,
                        VectorXd& b) {
  fill_phi(law, eta, phi);
  b.noalias() = fc.lt * (phi - fc.mean);
  b *= fc.inv_s2;
  return fc.inv_s2 * (phi.dot(fc.mean) - 0.5 * fc.mean.squaredNorm()) -
         fc.half_logdet + 0.5 * b.dot(fc.cap.solve(b));
}

double mean_log_density(const FieldCache& fc, const TrajectoryLaw& law,
                        const TrajectoryEnsemble& sample) {
  const int m = sample.n, t = law.t_steps;
  std::vector<double> ld(m);
#pragma omp parallel
  {
    VectorXd phi(t), b(t);
    std::vector<double> eta(t + 1);
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k <= t; ++k) eta[k] = sample.at(k, i);
      ld[i] = eval_log_density(fc, law, eta, phi, b);
    }
  }
  // serial reduction in replica order so the estimate does not depend on
  // the thread count
  double acc = 0.0;
  for (double v : ld) acc += v;
  return acc / m;
}

}  // namespace

void validate(const TrajectoryLaw& law) {
  validate(law.model, law.theta);
  if (!(law.sigma > 0.0))
    throw std::invalid_argument("step noise sigma must be positive");
  if (law.t_steps < 1)
    throw std::invalid_argument("horizon must cover at least one step");
  if (law.init.std < 0.0)
    throw std::invalid_argument("initial spread must be >= 0");
}

GaussianFieldLaw gmu_from_sample(const TrajectoryEnsemble& sample, double jbar,
                                 double j2, const TransferFunction& f) {
  if (sample.n < 1 || sample.t_steps < 1)
    throw std::invalid_argument("field statistics need a nonempty sample");
  if (j2 < 0.0)
    throw std::invalid_argument("squared coupling j2 must be >= 0");
  const int t = sample.t_steps, m = sample.n;
  MatrixXd fa(t, m);
  for (int k = 0; k < t; ++k) {
    const double* frame = sample.frame(k);
    for (int i = 0; i < m; ++i) fa(k, i) = f(frame[i]);
  }
  GaussianFieldLaw g;
  g.t_steps = t;
  g.mean = (jbar / m) * fa.rowwise().sum();
  // uncentered second moment: Gram form, PSD up to roundoff
  g.cov = (j2 / m) * (fa * fa.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.cov, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() >= -1e-10))
    throw std::runtime_error("empirical field covariance fails the PSD floor; " +
                             eig_range(g.cov));
  return g;
}

double log_density_L(const GaussianFieldLaw& g, const TrajectoryLaw& law,
                     std::span<const double> eta) {
  validate(law);
  if (int(eta.size()) != law.t_steps + 1)
    throw std::invalid_argument("path must carry t_steps + 1 instants");
  FieldCache fc = prepare(g, law);
  VectorXd phi(law.t_steps), b(law.t_steps);
  return eval_log_density(fc, law, eta, phi, b);
}

double gamma_functional(const TrajectoryEnsemble& mu_sample,
                        const TrajectoryLaw& law, double jbar, double j2) {
  validate(law);
  if (mu_sample.n < 1)
    throw std::invalid_argument("empty trajectory sample");
  if (mu_sample.t_steps != law.t_steps)
    throw std::invalid_argument("sample horizon does not match the law");
  GaussianFieldLaw g = gmu_from_sample(mu_sample, jbar, j2, law.f);
  FieldCache fc = prepare(g, law);
  return mean_log_density(fc, law, mu_sample);
}

double network_log_density(const TrajectoryEnsemble& u,
                           const TrajectoryLaw& law, double jbar, double j2) {
  return u.n * gamma_functional(u, law, jbar, j2);
}

double relative_entropy_estimate(const GaussianFieldLaw& g_of_nu,
                                 const TrajectoryLaw& law,
                                 const TrajectoryEnsemble& sample_from_nu) {
  validate(law);
  if (sample_from_nu.n < 1)
    throw std::invalid_argument("empty trajectory sample");
  if (sample_from_nu.t_steps != law.t_steps)
    throw std::invalid_argument(
        "only field-driven laws on the free-law horizon are supported");
  check_horizon(g_of_nu, law.t_steps);
  FieldCache fc = prepare(g_of_nu, law);
  return mean_log_density(fc, law, sample_from_nu);
}

TrajectoryEnsemble sample_free(const TrajectoryLaw& law, int m,
                               uint64_t seed) {
  validate(law);
  if (m < 1) throw std::invalid_argument("need at least one replica");
  const int t = law.t_steps;
  const bool leaky = law.model.kind == NeuronKind::IF;
  TrajectoryEnsemble e;
  e.n = m;
  e.t_steps = t;
  e.u.assign(std::size_t(t + 1) * m, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    RngStream rng(seed, stream_id(StreamPurpose::Noise, uint64_t(i)));
    double prev = law.init.mean + law.init.std * rng.normal();
    e.u[i] = prev;
    for (int k = 0; k < t; ++k) {
      const double base = leaky ? if_leak(law.model.gamma, law.model.reset,
                                          law.theta, prev + law.theta)
                                : 0.0;
      prev = base - law.theta + law.sigma * rng.normal();
      e.u[std::size_t(k + 1) * m + i] = prev;
    }
  }
  return e;
}

TrajectoryEnsemble sample_propagated(const GaussianFieldLaw& g,
                                     const TrajectoryLaw& law, int m,
                                     uint64_t seed) {
  validate(law);
  if (m < 1) throw std::invalid_argument("need at least one replica");
  const int t = law.t_steps;
  const bool leaky = law.model.kind == NeuronKind::IF;
  const MatrixXd l = field_chol(g, t);
  TrajectoryEnsemble e;
  e.n = m;
  e.t_steps = t;
  e.u.assign(std::size_t(t + 1) * m, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    RngStream rng(seed, stream_id(StreamPurpose::Oracle, uint64_t(i)));
    // draw order: initial condition, frozen field, then step noise
    double prev = law.init.mean + law.init.std * rng.normal();
    e.u[i] = prev;
    VectorXd z(t);
    for (int k = 0; k < t; ++k) z[k] = rng.normal();
    const VectorXd v = g.mean + l * z;  // one field draw per replica
    for (int k = 0; k < t; ++k) {
      const double base = leaky ? if_leak(law.model.gamma, law.model.reset,
                                          law.theta, prev + law.theta)
                                : 0.0;
      prev = base + v[k] - law.theta + law.sigma * rng.normal();
      e.u[std::size_t(k + 1) * m + i] = prev;
    }
  }
  return e;
}

double scalar_girsanov_log_density(const std::function<double(double)>& phi,
                                   const std::function<double(double)>& psi,
                                   double alpha, double k_var,
                                   std::span<const double> eta) {
  if (!(k_var > 0.0))
    throw std::invalid_argument("noise variance must be positive");
  if (eta.size() < 2)
    throw std::invalid_argument("path must carry at least one transition");
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < eta.size(); ++t) {
    const double d = psi(eta[t]) - phi(eta[t]);
    acc += (d * (eta[t + 1] - alpha - phi(eta[t])) - 0.5 * d * d) / k_var;
  }
  return acc;
}

}  // namespace rrnn
