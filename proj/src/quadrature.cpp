#include "rrnn/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <stdexcept>
#include <string>

namespace rrnn {

void throw_nonfinite(double node, double value) {
  throw std::runtime_error("non-finite integrand value " +
                           std::to_string(value) + " at node " +
                           std::to_string(node));
}

// Golub-Welsch construction on the orthonormal recurrence for the standard
// normal measure, x p_k = sqrt(k+1) p_{k+1} + sqrt(k) p_{k-1}: nodes are the
// eigenvalues of the Jacobi matrix, weights come from the Christoffel
// function w = 1 / sum_k p_k(x)^2.  The sum is evaluated through the scaled
// functions psi_k = p_k e^{-x^2/4} (2 pi)^{-1/4}, which stay O(1) for any
// order; far-tail weights below the smallest subnormal flush to zero, which
// is exact to within 1e-300 for integrals of bounded functions.
GaussHermite GaussHermite::make(int order) {
  if (order < 1)
    throw std::invalid_argument("quadrature order must be >= 1, got " +
                                std::to_string(order));
  const int n = order;
  GaussHermite gh;
  gh.x.resize(n);
  gh.w.resize(n);
  if (n == 1) {
    gh.x[0] = 0.0;
    gh.w[0] = 1.0;
    return gh;
  }

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(n - 1);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Gauss-Hermite tridiagonal eigensolve failed");

  // eigenvalues are ascending and symmetric up to round-off; enforce the
  // symmetry exactly and evaluate weights on the nonnegative half
  const double log_norm = -0.25 * std::log(2.0 * 3.14159265358979323846);
  for (int i = n / 2; i < n; ++i) {
    double x = 0.5 * (es.eigenvalues()(i) - es.eigenvalues()(n - 1 - i));
    if (2 * i == n - 1) x = 0.0;
    double sum2 = 0.0;
    double e = -0.25 * x * x + log_norm;
    double psi_prev = 0.0, psi = std::exp(e);  // psi_0; 0 beyond ~|x| = 54
    sum2 += psi * psi;
    for (int k = 1; k < n; ++k) {
      double next =
          (x * psi - std::sqrt(double(k - 1)) * psi_prev) / std::sqrt(double(k));
      psi_prev = psi;
      psi = next;
      sum2 += psi * psi;
    }
    double num = std::exp(-0.5 * x * x + 2.0 * log_norm);
    double w = sum2 > 0.0 ? num / sum2 : 0.0;
    gh.x[i] = x;
    gh.w[i] = w;
    gh.x[n - 1 - i] = -x;
    gh.w[n - 1 - i] = w;
  }
  return gh;
}

const GaussHermite& refined_for_scale(const GaussHermite& base, double max_sd) {
  // order n resolves scale a at ~3e-9 once n >= 9.7 a^2 (pole distance
  // pi/a, error exp(-2 pi sqrt(n) / a))
  double need = 9.7 * max_sd * max_sd;
  if (double(base.order()) >= need) return base;
  if (need <= 128.0) {
    static const GaussHermite g = GaussHermite::make(128);
    return g;
  }
  if (need <= 256.0) {
    static const GaussHermite g = GaussHermite::make(256);
    return g;
  }
  if (need <= 512.0) {
    static const GaussHermite g = GaussHermite::make(512);
    return g;
  }
  if (need <= 1024.0) {
    static const GaussHermite g = GaussHermite::make(1024);
    return g;
  }
  static const GaussHermite g = GaussHermite::make(2048);
  return g;
}

}  // namespace rrnn
