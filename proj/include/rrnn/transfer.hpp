#pragma once
#include <cmath>
#include <stdexcept>

namespace rrnn {

enum class TransferKind { Heaviside, Logistic };

// Pointwise firing nonlinearity.  Logistic is f(x) = 1 / (1 + exp(-gain x)),
// evaluated tail-stably; Heaviside fires on x >= 0.
struct TransferFunction {
  TransferKind kind = TransferKind::Logistic;
  double gain = 1.0;

  double operator()(double x) const {
    if (kind == TransferKind::Heaviside) return x >= 0.0 ? 1.0 : 0.0;
    double gx = gain * x;
    if (gx >= 0.0) return 1.0 / (1.0 + std::exp(-gx));
    double e = std::exp(gx);
    return e / (1.0 + e);
  }

  // df/dx; equals gain * f * (1 - f) on the logistic branch.
  double deriv(double x) const {
    if (kind == TransferKind::Heaviside)
      throw std::invalid_argument(
          "Heaviside transfer has no pointwise derivative");
    double fx = (*this)(x);
    return gain * fx * (1.0 - fx);
  }
};

inline TransferFunction logistic(double gain = 1.0) {
  return {TransferKind::Logistic, gain};
}
inline TransferFunction heaviside() {
  return {TransferKind::Heaviside, 1.0};
}

}  // namespace rrnn
