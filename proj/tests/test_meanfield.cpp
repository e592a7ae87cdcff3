#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rrnn/meanfield.hpp"

using namespace rrnn;

namespace {
const GaussHermite& gh64() {
  static GaussHermite gh = GaussHermite::make(64);
  return gh;
}
}  // namespace

TEST_CASE("q_map anchor values") {
  auto f = logistic();
  // frozen input: h(0) = f(-theta)^2
  CHECK(q_map(0.0, 4.0, 0.0, f, gh64()) == doctest::Approx(0.25).epsilon(1e-12));
  double f2 = f(-2.0);
  CHECK(q_map(0.0, 1.0, 2.0, f, gh64()) ==
        doctest::Approx(f2 * f2).epsilon(1e-12));
  // saturated input: f^2 approaches the step function, mean 1/2
  CHECK(q_map(1e8, 1.0, 0.0, f, gh64()) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS_AS(q_map(-0.1, 1.0, 0.0, f, gh64()), std::domain_error);
}

TEST_CASE("q_map is monotone in q and bounded by [0, 1/2] for theta >= 0") {
  auto f = logistic();
  RngStream r(5, 1);
  for (int k = 0; k < 100; ++k) {
    double j2 = 0.1 + 16.0 * r.uniform_co();
    double theta = 2.5 * r.uniform_co();
    double q1 = 0.6 * r.uniform_co();
    double q2 = q1 + 0.4 * r.uniform();
    double h1 = q_map(q1, j2, theta, f, gh64());
    double h2 = q_map(q2, j2, theta, f, gh64());
    CHECK(h1 >= 0.0);
    CHECK(h2 <= 0.5 + 1e-12);
    CHECK(h1 <= h2 + 1e-12);
  }
}

TEST_CASE("fixed_point_q converges with small residual and is monotone") {
  auto f = logistic();
  double prev = -1.0;
  for (double j2 : {0.25, 1.0, 4.0, 16.0}) {
    auto r = fixed_point_q(j2, 0.5, f, gh64());
    CHECK(r.converged);
    CHECK(r.residual < 1e-9);
    CHECK(r.q_star > prev);  // increasing in j2
    prev = r.q_star;
  }
  prev = 2.0;
  for (double theta : {0.0, 0.5, 1.0, 2.0}) {
    auto r = fixed_point_q(4.0, theta, f, gh64());
    CHECK(r.converged);
    CHECK(r.q_star < prev);  // decreasing in theta
    prev = r.q_star;
  }
}

TEST_CASE("scaled map agrees with the unscaled recursion") {
  auto f = logistic();
  MeanFieldParams p{0.0, 9.0, 0.7, 0.0, f};
  int T = 30;
  // the scaled map starts from h(0) = f(-theta)^2, which corresponds to a
  // recursion started frozen at the resting potential -theta
  auto s = propagate_moments(p, -p.theta, 0.0, T, gh64());
  double qs = 0.0;
  for (int t = 0; t < T; ++t) {
    qs = q_map(qs, p.j2, p.theta, f, gh64());
    CHECK(s.q[t + 1] / p.j2 == doctest::Approx(qs).epsilon(1e-8));
  }
}

TEST_CASE("propagate_moments basics") {
  auto f = logistic();
  MeanFieldParams p{0.0, 4.0, 0.0, 0.1, f};
  auto s = propagate_moments(p, 0.0, 0.0, 10, gh64());
  // balanced couplings: the field mean vanishes for all t >= 1
  for (int t = 1; t <= 10; ++t) CHECK(s.m[t] == doctest::Approx(0.0));
  // frozen start at 0 with theta = 0: q(1) = j2 f(0)^2 = j2 / 4
  CHECK(s.q[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.c(1, 1) == doctest::Approx(s.q[1]).epsilon(1e-14));

  MeanFieldParams p2{1.3, 2.0, 0.4, 0.2, f};
  auto s2 = propagate_moments(p2, 0.1, 0.05, 12, gh64());
  for (int t = 1; t <= 12; ++t) {
    CHECK(s2.c(t, t) == doctest::Approx(s2.q[t]).epsilon(1e-13));
    for (int u = 1; u <= t; ++u) {
      CHECK(s2.c(t, u) == s2.c(u, t));
      // second-moment matrix obeys Cauchy-Schwarz
      CHECK(std::abs(s2.c(u, t)) <=
            std::sqrt(s2.q[u] * s2.q[t]) + 1e-10);
    }
  }
}

TEST_CASE("covariance matrix along the recursion is positive semidefinite") {
  auto f = logistic();
  RngStream r(17, 2);
  for (int rep = 0; rep < 5; ++rep) {
    MeanFieldParams p{-1.0 + 2.0 * r.uniform_co(), 0.5 + 12.0 * r.uniform_co(),
                      1.5 * r.uniform_co(), 0.3 * r.uniform_co(), f};
    int T = 16;
    auto s = propagate_moments(p, 0.3 * r.uniform_co(), 0.2 * r.uniform_co(),
                               T, gh64());
    Eigen::MatrixXd c(T, T);
    for (int i = 1; i <= T; ++i)
      for (int j = 1; j <= T; ++j) c(i - 1, j - 1) = s.c(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("long-time limit of the moment recursion matches fixed_point_q") {
  auto f = logistic();
  for (double j2 : {1.0, 4.0, 9.0}) {
    MeanFieldParams p{0.0, j2, 0.5, 1e-6, f};
    auto s = propagate_moments(p, 0.0, 0.0, 400, gh64(), false);
    auto r = fixed_point_q(j2, 0.5, f, gh64());
    CHECK(s.q[400] / j2 == doctest::Approx(r.q_star).epsilon(1e-4));
  }
}

TEST_CASE("covariance_map fixes q_star and factorizes at c = 0") {
  auto f = logistic();
  for (double j2 : {1.0, 4.0, 25.0}) {
    auto r = fixed_point_q(j2, 0.0, f, gh64());
    double h = covariance_map(r.q_star, r.q_star, j2, 0.0, f, gh64());
    CHECK(h == doctest::Approx(r.q_star).epsilon(1e-9));
    // theta = 0: H(0) = (E f)^2 = 1/4 by symmetry
    CHECK(covariance_map(0.0, r.q_star, j2, 0.0, f, gh64()) ==
          doctest::Approx(0.25).epsilon(1e-10));
  }
}

TEST_CASE("stability multiplier: finite difference matches the derivative formula") {
  // the transition needs a steep transfer relative to the field width; the
  // grid straddles it with gain 2 (crossing near j2 ~ 27 at theta = 0)
  auto f = logistic(2.0);
  int idx = 0;
  for (double j2 : {0.5, 2.0, 8.0, 24.0, 48.0}) {
    for (double theta : {0.0, 0.8}) {
      auto r = fixed_point_q(j2, theta, f, gh64());
      auto st = stability_multiplier(j2, theta, r.q_star, f, gh64());
      CHECK(st.multiplier ==
            doctest::Approx(st.multiplier_analytic).epsilon(1e-4));
      ++idx;
    }
  }
  CHECK(idx == 10);
  // weak coupling is stable, strong coupling at theta = 0 is not
  auto weak = fixed_point_q(0.5, 0.0, f, gh64());
  CHECK(stability_multiplier(0.5, 0.0, weak.q_star, f, gh64()).multiplier <
        1.0);
  auto strong = fixed_point_q(64.0, 0.0, f, gh64());
  CHECK(stability_multiplier(64.0, 0.0, strong.q_star, f, gh64()).multiplier >
        1.0);
  // a shallow transfer stays below the transition across this whole range
  auto g1 = fixed_point_q(64.0, 0.0, logistic(), gh64());
  CHECK(stability_multiplier(64.0, 0.0, g1.q_star, logistic(), gh64())
            .multiplier < 1.0);
}

TEST_CASE("covariance fixed point splits from q_star past the transition") {
  auto f = logistic(2.0);
  auto stable = fixed_point_q(1.0, 0.0, f, gh64());
  auto cs = covariance_fixed_point(1.0, 0.0, stable.q_star, f, gh64());
  CHECK(cs.converged);
  CHECK(cs.c_star == doctest::Approx(stable.q_star).epsilon(1e-6));

  auto chaotic = fixed_point_q(64.0, 0.0, f, gh64());
  auto cc = covariance_fixed_point(64.0, 0.0, chaotic.q_star, f, gh64());
  CHECK(cc.converged);
  CHECK(cc.c_star < chaotic.q_star - 1e-3);
  // c* is a genuine fixed point of H
  double back =
      covariance_map(cc.c_star, chaotic.q_star, 64.0, 0.0, f, gh64());
  CHECK(back == doctest::Approx(cc.c_star).epsilon(1e-8));
}

TEST_CASE("cross-covariance twin series") {
  auto f = logistic();
  // shared start, no noise: the copies never separate
  MeanFieldParams quiet{0.0, 4.0, 0.3, 0.0, f};
  auto tw = cross_covariance_series(quiet, 0.0, 0.2, 0.2, 20, gh64());
  for (int t = 0; t <= 20; ++t) CHECK(std::abs(tw.d12[t]) < 1e-12);

  // d12 is nonnegative for arbitrary parameters
  RngStream r(23, 4);
  for (int rep = 0; rep < 50; ++rep) {
    MeanFieldParams p{-0.5 + r.uniform_co(), 0.2 + 10.0 * r.uniform_co(),
                      r.uniform_co(), 0.4 * r.uniform_co(), f};
    double v0 = 0.3 * r.uniform_co();
    auto s = cross_covariance_series(p, 0.2 * r.uniform_co(), v0,
                                     v0 * r.uniform_co(), 15, gh64());
    for (double d : s.d12) CHECK(d > -1e-12);
  }

  // chaotic plateau approaches 2 j2 (q* - c*) as sigma -> 0
  double j2 = 64.0;
  auto f2 = logistic(2.0);
  MeanFieldParams chaotic{0.0, j2, 0.0, 1e-3, f2};
  auto series = cross_covariance_series(chaotic, 0.0, 0.0, 0.0, 400, gh64());
  auto fp = fixed_point_q(j2, 0.0, f2, gh64());
  auto cf = covariance_fixed_point(j2, 0.0, fp.q_star, f2, gh64());
  CHECK(fp.q_star - cf.c_star > 1e-3);
  double predicted = 2.0 * j2 * (fp.q_star - cf.c_star);
  CHECK(series.d12[400] == doctest::Approx(predicted).epsilon(0.02));

  // stable regime: the plateau collapses to the noise floor 2 sigma^2/(1-s)
  MeanFieldParams stable{0.0, 1.0, 0.0, 1e-3, f};
  auto st = cross_covariance_series(stable, 0.0, 0.0, 0.0, 400, gh64());
  CHECK(st.d12[400] < 1e-4);
}

TEST_CASE("chaos surface: gap tracks the multiplier and q* is monotone") {
  auto f = logistic(2.0);
  std::vector<double> j2s, thetas;
  for (int i = 0; i < 8; ++i) j2s.push_back(0.5 * std::pow(2.0, i));  // 0.5..64
  for (int k = 0; k < 4; ++k) thetas.push_back(0.5 * k);
  auto cells = chaos_surface(j2s, thetas, f, gh64(), true);
  REQUIRE(cells.size() == j2s.size() * thetas.size());
  int chaotic = 0, stable = 0;
  for (const auto& c : cells) {
    CHECK(c.converged);
    CHECK(c.gap > -1e-10);
    if (c.multiplier < 0.95) {
      CHECK(c.gap < 1e-5);
      ++stable;
    }
    if (c.multiplier > 1.05) {
      CHECK(c.gap > 1e-5);
      ++chaotic;
    }
  }
  CHECK(chaotic > 0);
  CHECK(stable > 0);
  const int nt = int(thetas.size());
  // the field variance j2 q* grows with the coupling strength
  for (int i = 0; i + 1 < int(j2s.size()); ++i)
    for (int k = 0; k < nt; ++k)
      CHECK(j2s[i] * cells[i * nt + k].q_star <
            j2s[i + 1] * cells[(i + 1) * nt + k].q_star);
  // and shrinks when the threshold pushes the working point into the tail
  for (int i = 0; i < int(j2s.size()); ++i)
    for (int k = 0; k + 1 < nt; ++k)
      CHECK(cells[i * nt + k].q_star > cells[i * nt + k + 1].q_star);
}
