#include "rrnn/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rrnn {

namespace {

// Strip half-width of the integrand f(sd * xi + m) is pi / (gain * sd) for
// the logistic family; the Heaviside case gains nothing from extra nodes.
inline double integrand_scale(const TransferFunction& f, double sd) {
  return f.kind == TransferKind::Logistic ? f.gain * sd : 0.0;
}

// mean and variance of the potential at time t under the mean-field law
inline void potential_law(const MeanFieldParams& p, const MomentSeries& s,
                          int t, double& mean, double& var) {
  if (t == 0) {
    mean = s.m[0];
    var = s.q[0];
  } else {
    mean = s.m[t] - p.theta;
    var = s.q[t] + p.sigma * p.sigma;
  }
}

}  // namespace

MomentSeries propagate_moments(const MeanFieldParams& p, double u0_mean,
                               double u0_var, int t_steps,
                               const GaussHermite& gh, bool with_covariance) {
  if (t_steps < 0) throw std::invalid_argument("t_steps must be >= 0");
  if (u0_var < 0.0) throw std::invalid_argument("initial variance must be >= 0");
  MomentSeries s;
  s.t_steps = t_steps;
  s.m.assign(t_steps + 1, 0.0);
  s.q.assign(t_steps + 1, 0.0);
  s.c = SymMat(with_covariance ? t_steps + 1 : 0);
  s.m[0] = u0_mean;
  s.q[0] = u0_var;
  if (with_covariance) s.c(0, 0) = u0_var;

  const auto& f = p.f;
  std::vector<double> fmean(t_steps + 1, 0.0);  // E f(eta_t), for the t=0 column

  for (int t = 0; t < t_steps; ++t) {
    double mean, var;
    potential_law(p, s, t, mean, var);
    double sd = std::sqrt(var);
    const GaussHermite& g = refined_for_scale(gh, integrand_scale(f, sd));
    double ef = integrate1(g, [&](double xi) { return f(sd * xi + mean); });
    double ef2 = integrate1(g, [&](double xi) {
      double v = f(sd * xi + mean);
      return v * v;
    });
    fmean[t] = ef;
    s.m[t + 1] = p.jbar * ef;
    s.q[t + 1] = p.j2 * ef2;
    if (with_covariance) s.c(t + 1, t + 1) = s.q[t + 1];
  }
  if (!with_covariance) return s;

  // the initial coordinate is independent of the field, so the first row of
  // the covariance factorizes
  for (int t = 1; t < t_steps; ++t)
    s.c.set_sym(1, t + 1, p.j2 * fmean[0] * fmean[t]);

  // interior recursion: c(s+1, t+1) from c(s, t)
  for (int t = 2; t <= t_steps; ++t) {
    for (int u = 2; u < t; ++u) {
      double mean_s, var_s, mean_t, var_t;
      potential_law(p, s, u - 1, mean_s, var_s);
      potential_law(p, s, t - 1, mean_t, var_t);
      const GaussHermite& g = refined_for_scale(
          gh, integrand_scale(f, std::sqrt(std::max(var_s, var_t))));
      double v = gaussian_pair_expectation(g, mean_s, mean_t, var_s, var_t,
                                           s.c(u - 1, t - 1), f, f);
      s.c.set_sym(u, t, p.j2 * v);
    }
  }
  return s;
}

double q_map(double q, double j2, double theta, const TransferFunction& f,
             const GaussHermite& gh) {
  if (q < 0.0) throw std::domain_error("q_map: negative variance");
  double a = std::sqrt(j2 * q);
  const GaussHermite& g = refined_for_scale(gh, integrand_scale(f, a));
  return integrate1(g, [&](double xi) {
    double v = f(a * xi - theta);
    return v * v;
  });
}

FixedPointResult fixed_point_q(double j2, double theta,
                               const TransferFunction& f,
                               const GaussHermite& gh, double tol) {
  FixedPointResult r;
  double q = q_map(0.0, j2, theta, f, gh);  // start from the deterministic image
  const int max_iter = 300;
  for (int k = 0; k < max_iter; ++k) {
    double hq = q_map(q, j2, theta, f, gh);
    double next = 0.5 * q + 0.5 * hq;
    r.iterations = k + 1;
    if (std::abs(hq - q) < tol) {
      r.q_star = q;
      r.residual = std::abs(hq - q);
      r.converged = true;
      return r;
    }
    q = next;
  }
  // bisection fallback on g(q) = h(q) - q; h is bounded by 1, so the upper
  // end of the bracket is always on the negative side
  double lo = 0.0, hi = std::max(1.0, j2 / 2.0);
  double glo = q_map(lo, j2, theta, f, gh) - lo;
  if (glo < 0.0) {
    r.q_star = 0.0;
    r.residual = std::abs(glo);
    r.converged = std::abs(glo) < tol;
    return r;
  }
  for (int k = 0; k < 200 && hi - lo > tol * 0.01; ++k) {
    double mid = 0.5 * (lo + hi);
    double g = q_map(mid, j2, theta, f, gh) - mid;
    (g > 0.0 ? lo : hi) = mid;
    ++r.iterations;
  }
  r.q_star = 0.5 * (lo + hi);
  r.residual = std::abs(q_map(r.q_star, j2, theta, f, gh) - r.q_star);
  r.converged = r.residual < 10.0 * tol;
  return r;
}

double covariance_map(double c, double q_star, double j2, double theta,
                      const TransferFunction& f, const GaussHermite& gh) {
  // unscaled variance/covariance are j2 q*, j2 c; the j2 prefactor of the
  // update cancels when the result is expressed in scaled units again
  const GaussHermite& g =
      refined_for_scale(gh, integrand_scale(f, std::sqrt(j2 * q_star)));
  return gaussian_pair_expectation(g, -theta, -theta, j2 * q_star, j2 * q_star,
                                   j2 * c, f, f);
}

StabilityResult stability_multiplier(double j2, double theta, double q_star,
                                     const TransferFunction& f,
                                     const GaussHermite& gh) {
  StabilityResult r;
  if (q_star < 1e-10) return r;  // frozen state, nothing to destabilize
  double h = 1e-4 * q_star;
  double h0 = covariance_map(q_star, q_star, j2, theta, f, gh);
  double h1 = covariance_map(q_star - h, q_star, j2, theta, f, gh);
  double h2 = covariance_map(q_star - 2.0 * h, q_star, j2, theta, f, gh);
  r.multiplier = (3.0 * h0 - 4.0 * h1 + h2) / (2.0 * h);
  if (f.kind == TransferKind::Logistic) {
    double a = std::sqrt(j2 * q_star);
    const GaussHermite& g = refined_for_scale(gh, integrand_scale(f, a));
    r.multiplier_analytic = j2 * integrate1(g, [&](double xi) {
      double d = f.deriv(a * xi - theta);
      return d * d;
    });
  } else {
    r.multiplier_analytic = r.multiplier;  // no pointwise derivative exists
  }
  return r;
}

CovFixedPointResult covariance_fixed_point(double j2, double theta,
                                           double q_star,
                                           const TransferFunction& f,
                                           const GaussHermite& gh,
                                           double tol) {
  CovFixedPointResult r;
  if (q_star < 1e-12) {
    r.c_star = q_star;
    r.converged = true;
    return r;
  }
  // H is increasing with H(q*) = q* and H(0) = (E f)^2 >= 0.  Probe just
  // below q*: if H(c) still exceeds c there, the fully correlated point is
  // attracting and is the only fixed point in [0, q*]; otherwise H crosses
  // the diagonal once more below it, bracketed by [0, probe].
  double probe = q_star * (1.0 - 1e-6);
  double gp = covariance_map(probe, q_star, j2, theta, f, gh) - probe;
  r.iterations = 1;
  if (gp >= 0.0) {
    r.c_star = q_star;
    r.converged = true;
    return r;
  }
  double lo = 0.0, hi = probe;
  while (hi - lo > tol && r.iterations < 200) {
    double mid = 0.5 * (lo + hi);
    double g = covariance_map(mid, q_star, j2, theta, f, gh) - mid;
    (g > 0.0 ? lo : hi) = mid;
    ++r.iterations;
  }
  r.c_star = 0.5 * (lo + hi);
  r.converged = hi - lo <= tol;
  return r;
}

TwinSeries cross_covariance_series(const MeanFieldParams& p, double u0_mean,
                                   double u0_var, double c12_0, int t_steps,
                                   const GaussHermite& gh) {
  if (std::abs(c12_0) > u0_var + 1e-12)
    throw std::invalid_argument(
        "initial cross-covariance exceeds the initial variance");
  MomentSeries s = propagate_moments(p, u0_mean, u0_var, t_steps, gh, false);
  TwinSeries tw;
  tw.c12.assign(t_steps + 1, 0.0);
  tw.d12.assign(t_steps + 1, 0.0);
  tw.c12[0] = std::min(c12_0, u0_var);
  tw.d12[0] = 2.0 * (u0_var - tw.c12[0]);
  const double sig2 = p.sigma * p.sigma;
  for (int t = 0; t < t_steps; ++t) {
    double mean, var;
    potential_law(p, s, t, mean, var);
    const GaussHermite& g =
        refined_for_scale(gh, integrand_scale(p.f, std::sqrt(var)));
    double v = gaussian_pair_expectation(g, mean, mean, var, var, tw.c12[t],
                                         p.f, p.f);
    tw.c12[t + 1] = p.j2 * v;
    // independent dynamic noise in the two copies: the potentials carry
    // q + sigma^2 of variance each but only c12 of common part
    tw.d12[t + 1] = 2.0 * (s.q[t + 1] + sig2) - 2.0 * tw.c12[t + 1];
  }
  return tw;
}

std::vector<ChaosSurfaceCell> chaos_surface(std::span<const double> j2_values,
                                            std::span<const double> theta_values,
                                            const TransferFunction& f,
                                            const GaussHermite& gh,
                                            bool parallel) {
  const int nj = int(j2_values.size()), nt = int(theta_values.size());
  std::vector<ChaosSurfaceCell> cells(std::size_t(nj) * nt);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int idx = 0; idx < nj * nt; ++idx) {
    int i = idx / nt, k = idx % nt;
    ChaosSurfaceCell& cell = cells[idx];
    cell.j2 = j2_values[i];
    cell.theta = theta_values[k];
    try {
      auto fp = fixed_point_q(cell.j2, cell.theta, f, gh);
      cell.q_star = fp.q_star;
      auto st = stability_multiplier(cell.j2, cell.theta, fp.q_star, f, gh);
      cell.multiplier = st.multiplier;
      auto cv = covariance_fixed_point(cell.j2, cell.theta, fp.q_star, f, gh);
      cell.c_star = cv.c_star;
      cell.gap = fp.q_star - cv.c_star;
      cell.converged = fp.converged && cv.converged;
    } catch (const std::exception&) {
      // an exception must not escape the parallel region; the cell reports
      // failure instead
      cell.converged = false;
    }
  }
  return cells;
}

}  // namespace rrnn
