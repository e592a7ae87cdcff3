#pragma once
#include <cstdint>
#include <span>
#include <vector>

namespace rrnn {

// Dense symmetric matrix with full storage.  Orders stay in the hundreds
// here, so no packing tricks.
struct SymMat {
  int n = 0;
  std::vector<double> a;

  SymMat() = default;
  explicit SymMat(int order) : n(order), a(std::size_t(order) * order, 0.0) {}

  double& operator()(int i, int j) { return a[std::size_t(i) * n + j]; }
  double operator()(int i, int j) const { return a[std::size_t(i) * n + j]; }
  void set_sym(int i, int j, double v) {
    (*this)(i, j) = v;
    (*this)(j, i) = v;
  }
};

// Cascade summation; the result does not depend on how callers chunked the
// work that produced x, which keeps parallel reductions reproducible.
double pairwise_sum(std::span<const double> x);
double mean(std::span<const double> x);
double variance(std::span<const double> x);  // population normalization 1/n

uint64_t fnv1a(const void* data, std::size_t n,
               uint64_t h = 1469598103934665603ull);

}  // namespace rrnn
