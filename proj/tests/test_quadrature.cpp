#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rrnn/quadrature.hpp"
#include "rrnn/rng.hpp"
#include "rrnn/transfer.hpp"

using namespace rrnn;

namespace {
// E[xi^k] under N(0,1): 0 for odd k, (k-1)!! for even k
double normal_moment(int k) {
  if (k % 2 == 1) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j > 1; j -= 2) m *= j;
  return m;
}
}  // namespace

TEST_CASE("gauss-hermite weights are normalized and nodes symmetric") {
  for (int n : {1, 2, 5, 16, 64, 128}) {
    auto gh = GaussHermite::make(n);
    double sw = 0.0;
    for (double w : gh.w) sw += w;
    CHECK(sw == doctest::Approx(1.0).epsilon(1e-13));
    for (int i = 0; i < n; ++i) {
      CHECK(gh.x[i] == doctest::Approx(-gh.x[n - 1 - i]).epsilon(1e-13));
      CHECK(gh.w[i] == doctest::Approx(gh.w[n - 1 - i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("gauss-hermite is exact on polynomials of degree 2n-1") {
  for (int n : {1, 2, 3, 4, 6, 8, 10, 32, 64}) {
    auto gh = GaussHermite::make(n);
    for (int k = 0; k <= 2 * n - 1 && k <= 20; ++k) {
      double got = integrate1(gh, [&](double x) { return std::pow(x, k); });
      double want = normal_moment(k);
      // odd moments vanish by cancellation of terms of size ~ (k+1)!!, so
      // "relative" means relative to that scale
      double scale = want != 0.0 ? want : normal_moment(k + 1);
      CHECK(std::abs(got - want) / scale < 1e-10);
    }
  }
}

TEST_CASE("reference integrals") {
  auto gh = GaussHermite::make(64);
  CHECK(integrate1(gh, [](double) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(integrate1(gh, [](double x) { return x * x; }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  auto f = logistic();
  // symmetry gives exactly 1/2 for the logistic mean
  CHECK(integrate1(gh, f) == doctest::Approx(0.5).epsilon(1e-13));
  // E[exp(a xi)] = exp(a^2 / 2)
  for (double a : {0.3, 1.0, 2.0})
    CHECK(integrate1(gh, [&](double x) { return std::exp(a * x); }) ==
          doctest::Approx(std::exp(0.5 * a * a)).epsilon(1e-10));
  // tensor rule
  CHECK(integrate2(gh, [](double a, double b) { return a * b; }) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(integrate2(gh, [&](double a, double b) { return f(a) * f(b); }) ==
        doctest::Approx(0.25).epsilon(1e-12));
  double ca = 0.7, cb = -1.3;
  CHECK(integrate2(gh, [&](double a, double b) {
          double v = ca * a + cb * b;
          return v * v;
        }) == doctest::Approx(ca * ca + cb * cb).epsilon(1e-12));
}

TEST_CASE("monte carlo companion agrees with the deterministic rule") {
  auto gh = GaussHermite::make(64);
  auto f = [](double x) { return std::tanh(0.8 * x - 0.4) + 0.1 * x; };
  double det = integrate1(gh, f);
  RngStream rng(2024, stream_id(StreamPurpose::Oracle, 3));
  auto mc = integrate1_mc(1000000, rng, f);
  CHECK(std::abs(mc.value - det) < 4.0 * mc.std_error);
  CHECK(mc.std_error < 2e-3);

  auto f2 = [](double a, double b) { return std::tanh(a) * std::tanh(a + b); };
  double det2 = integrate2(gh, f2);
  RngStream rng2(2024, stream_id(StreamPurpose::Oracle, 4));
  auto mc2 = integrate2_mc(1000000, rng2, f2);
  CHECK(std::abs(mc2.value - det2) < 4.0 * mc2.std_error);
}

TEST_CASE("non-finite integrand values are reported with the node") {
  auto gh = GaussHermite::make(16);
  CHECK_THROWS_AS(integrate1(gh, [](double x) { return std::log(x); }),
                  std::runtime_error);
}

TEST_CASE("gaussian pair expectation: exact identities") {
  auto gh = GaussHermite::make(64);
  auto id = [](double x) { return x; };

  // E[XY] = mx my + cov
  double got = gaussian_pair_expectation(gh, 0.3, -0.8, 2.0, 1.5, 0.9, id, id);
  CHECK(got == doctest::Approx(0.3 * -0.8 + 0.9).epsilon(1e-12));

  // independence factorizes
  auto f = logistic();
  double fx = gaussian_pair_expectation(gh, 0.2, 1.0, 1.3, 0.7, 0.0, f, f);
  auto gh1 = GaussHermite::make(64);
  double ex = integrate1(gh1, [&](double x) {
    return f(std::sqrt(1.3) * x + 0.2);
  });
  double ey = integrate1(gh1, [&](double x) {
    return f(std::sqrt(0.7) * x + 1.0);
  });
  CHECK(fx == doctest::Approx(ex * ey).epsilon(1e-12));

  // perfect correlation collapses to a single integral of the product
  double vx = 1.7;
  double per = gaussian_pair_expectation(gh, 0.1, 0.1, vx, vx, vx, f, f);
  double one_dim = integrate1(gh, [&](double x) {
    double u = std::sqrt(vx) * x + 0.1;
    return f(u) * f(u);
  });
  CHECK(per == doctest::Approx(one_dim).epsilon(1e-12));
}

TEST_CASE("gaussian pair expectation: argument symmetry") {
  auto gh = GaussHermite::make(64);
  auto f = logistic();
  auto g = [](double x) { return std::tanh(0.5 * x); };
  struct P {
    double mx, my, vx, vy, c;
  };
  for (P p : {P{0.0, 0.0, 1.0, 1.0, 0.5}, P{0.4, -0.2, 2.0, 0.5, -0.6},
              P{-1.0, 1.0, 0.3, 3.0, 0.7}, P{0.0, 2.0, 1.0, 4.0, -1.9}}) {
    double a = gaussian_pair_expectation(gh, p.mx, p.my, p.vx, p.vy, p.c, f, g);
    double b = gaussian_pair_expectation(gh, p.my, p.mx, p.vy, p.vx, p.c, g, f);
    CHECK(a == doctest::Approx(b).epsilon(1e-8));
  }
}

TEST_CASE("gaussian pair expectation: monte carlo oracle") {
  auto gh = GaussHermite::make(64);
  auto f = logistic();
  double mx = 0.2, my = -0.5, vx = 1.2, vy = 0.8, cov = 0.5;
  double det = gaussian_pair_expectation(gh, mx, my, vx, vy, cov, f, f);

  // direct bivariate sampling, independent implementation path
  RngStream rng(777, stream_id(StreamPurpose::Oracle, 8));
  const int n = 1000000;
  double sy = std::sqrt(vy);
  double b = cov / sy;
  double a = std::sqrt(vx - b * b);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z1 = rng.normal(), z2 = rng.normal();
    double v = f(a * z1 + b * z2 + mx) * f(sy * z2 + my);
    s += v;
    s2 += v * v;
  }
  double m = s / n;
  double se = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(det - m) < 3.0 * se);
}

TEST_CASE("gaussian pair expectation: degenerate marginals and domain errors") {
  auto gh = GaussHermite::make(64);
  auto f = logistic();

  // var_y -> 0 treats Y as the constant mean_y
  double lim = gaussian_pair_expectation(gh, 0.3, 0.7, 1.1, 0.0, 0.0, f, f);
  double near = gaussian_pair_expectation(gh, 0.3, 0.7, 1.1, 1e-12, 0.0, f, f);
  CHECK(lim == doctest::Approx(near).epsilon(1e-6));
  double expl = f(0.7) * integrate1(gh, [&](double x) {
                  return f(std::sqrt(1.1) * x + 0.3);
                });
  CHECK(lim == doctest::Approx(expl).epsilon(1e-13));

  // both degenerate
  CHECK(gaussian_pair_expectation(gh, 0.3, 0.7, 0.0, 0.0, 0.0, f, f) ==
        doctest::Approx(f(0.3) * f(0.7)).epsilon(1e-13));

  // round-off covariance overshoot is clamped, genuine violation is an error
  CHECK_NOTHROW(
      gaussian_pair_expectation(gh, 0.0, 0.0, 1.0, 1.0, 1.0 + 1e-13, f, f));
  CHECK_THROWS_AS(
      gaussian_pair_expectation(gh, 0.0, 0.0, 1.0, 1.0, 1.01, f, f),
      std::domain_error);
  CHECK_THROWS_AS(
      gaussian_pair_expectation(gh, 0.0, 0.0, -1.0, 1.0, 0.0, f, f),
      std::domain_error);
}

TEST_CASE("integrate1 preserves pointwise ordering") {
  auto gh = GaussHermite::make(32);
  auto lo = [](double x) { return std::tanh(x); };
  auto hi = [](double x) { return std::tanh(x) + 0.01; };
  CHECK(integrate1(gh, lo) < integrate1(gh, hi));
}

TEST_CASE("scale-refined rules resolve wide logistic integrands") {
  auto gh64 = GaussHermite::make(64);
  auto f = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  // small scales keep the caller's rule
  CHECK(&refined_for_scale(gh64, 0.0) == &gh64);
  CHECK(&refined_for_scale(gh64, 2.0) == &gh64);
  for (double a : {3.0, 5.0, 8.0, 12.0}) {
    const auto& g = refined_for_scale(gh64, a);
    CHECK(g.order() > 64);
    // the chosen order agrees with a rule one ladder step finer to within the
    // ladder's design guarantee (~3e-9 absolute, exp(-2 pi sqrt(9.7)))
    auto finer = GaussHermite::make(2 * g.order());
    auto moment = [&](const GaussHermite& rule) {
      return integrate1(rule, [&](double xi) {
        double v = f(a * xi);
        return v * v;
      });
    };
    CHECK(moment(g) == doctest::Approx(moment(finer)).epsilon(5e-8));
    // while the 64-point rule visibly degrades at the largest scales
    if (a >= 8.0) CHECK(std::abs(moment(gh64) - moment(finer)) > 1e-9);
  }
  // the ladder is monotone in the requested scale
  CHECK(refined_for_scale(gh64, 3.0).order() <=
        refined_for_scale(gh64, 5.0).order());
  CHECK(refined_for_scale(gh64, 14.0).order() == 2048);
}
