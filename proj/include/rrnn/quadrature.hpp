#pragma once
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rrnn/rng.hpp"

namespace rrnn {

// Gauss-Hermite rule expressed against the standard normal measure: nodes x_i
// and weights w_i with sum(w) = 1 integrate polynomials up to degree 2n-1
// exactly under N(0,1).  Built by Golub-Welsch from the Jacobi matrix of the
// orthonormal Hermite recurrence, so arbitrary orders stay accurate.
struct GaussHermite {
  std::vector<double> x, w;

  static GaussHermite make(int order);
  int order() const { return int(x.size()); }
};

// Integrands of the form f(a xi) with poles at distance pi/a from the real
// axis (logistic and its derivatives) lose accuracy as a grows: the n-point
// rule converges like exp(-2 pi sqrt(n) / a), so holding n >= 9.7 a^2 keeps
// the absolute error near 3e-9.  This returns `base` when it already
// resolves the requested scale a = max_sd and otherwise a shared rule from a
// fixed ladder of orders (up to 2048, covering a <= 14.5).  Thread-safe; the
// reference stays valid for the program lifetime.
const GaussHermite& refined_for_scale(const GaussHermite& base, double max_sd);

[[noreturn]] void throw_nonfinite(double node, double value);

template <class F>
double integrate1(const GaussHermite& gh, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < gh.x.size(); ++i) {
    double v = f(gh.x[i]);
    if (!std::isfinite(v)) throw_nonfinite(gh.x[i], v);
    s += gh.w[i] * v;
  }
  return s;
}

// Tensor-product rule for E[f(X1, X2)] with X1, X2 independent N(0,1).
template <class F>
double integrate2(const GaussHermite& gh, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < gh.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < gh.x.size(); ++j) {
      double v = f(gh.x[i], gh.x[j]);
      if (!std::isfinite(v)) throw_nonfinite(gh.x[j], v);
      row += gh.w[j] * v;
    }
    s += gh.w[i] * row;
  }
  return s;
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Plain Monte Carlo companions used to cross-check the deterministic rules on
// integrands that are not polynomial.
template <class F>
McEstimate integrate1_mc(std::size_t n, RngStream& rng, F&& f) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = f(rng.normal());
    s += v;
    s2 += v * v;
  }
  double m = s / double(n);
  double var = s2 / double(n) - m * m;
  return {m, std::sqrt(std::max(0.0, var) / double(n))};
}

template <class F>
McEstimate integrate2_mc(std::size_t n, RngStream& rng, F&& f) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = f(rng.normal(), rng.normal());
    s += v;
    s2 += v * v;
  }
  double m = s / double(n);
  double var = s2 / double(n) - m * m;
  return {m, std::sqrt(std::max(0.0, var) / double(n))};
}

// E[g1(X) g2(Y)] for (X, Y) jointly Gaussian with the given moments, reduced
// to the tensor rule through X = a xi1 + b xi2 + mean_x, Y = c xi2 + mean_y
// with c^2 = var_y, b c = cov, a^2 + b^2 = var_x.  cov is clamped onto the
// Cauchy-Schwarz bound when it overshoots by round-off (<= 1e-12); a larger
// violation is a domain error.  A degenerate marginal collapses to the
// corresponding 1-d rule.
template <class F, class G>
double gaussian_pair_expectation(const GaussHermite& gh, double mean_x,
                                 double mean_y, double var_x, double var_y,
                                 double cov, F&& g1, G&& g2) {
  if (var_x < 0.0 || var_y < 0.0)
    throw std::domain_error("gaussian_pair_expectation: negative variance");
  double bound = std::sqrt(var_x * var_y);
  if (std::abs(cov) > bound + 1e-12)
    throw std::domain_error(
        "gaussian_pair_expectation: covariance violates the Cauchy-Schwarz "
        "bound");
  if (cov > bound) cov = bound;
  if (cov < -bound) cov = -bound;

  constexpr double tiny = 1e-300;
  if (var_y <= tiny) {
    double gy = g2(mean_y);
    if (var_x <= tiny) return g1(mean_x) * gy;
    double sx = std::sqrt(var_x);
    return gy * integrate1(gh, [&](double xi) { return g1(sx * xi + mean_x); });
  }
  if (var_x <= tiny) {
    double gx = g1(mean_x);
    double sy = std::sqrt(var_y);
    return gx * integrate1(gh, [&](double xi) { return g2(sy * xi + mean_y); });
  }

  double c = std::sqrt(var_y);
  double b = cov / c;
  double a = std::sqrt(std::max(0.0, var_x - b * b));
  return integrate2(gh, [&](double xi1, double xi2) {
    return g1(a * xi1 + b * xi2 + mean_x) * g2(c * xi2 + mean_y);
  });
}

}  // namespace rrnn
