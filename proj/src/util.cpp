#include "rrnn/util.hpp"

#include <cstddef>

namespace rrnn {

namespace {
double pairwise_rec(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_rec(x, half) + pairwise_rec(x + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> x) {
  return pairwise_rec(x.data(), x.size());
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return pairwise_sum(x) / double(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double m = mean(x);
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - m) * (x[i] - m);
  return mean(d);
}

uint64_t fnv1a(const void* data, std::size_t n, uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rrnn
