#include <doctest.h>

#include <cmath>

#include "jointfit/quadrature.hpp"

using namespace jointfit;

TEST_CASE("polynomials are integrated exactly") {
  // A 15-point Gauss-Kronrod rule is exact for polynomials up to degree 29.
  const double val = integrate_gk15([](double t) { return 3 * t * t - 2 * t + 1; },
                                    0.0, 4.0, 1);
  CHECK(val == doctest::Approx(64.0 - 16.0 + 4.0).epsilon(1e-13));

  const double high = integrate_gk15([](double t) { return std::pow(t, 11); }, 0.0, 2.0, 1);
  CHECK(high == doctest::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
}

TEST_CASE("constant hazard gives a linear cumulative hazard") {
  const double rate = 0.37;
  for (double t : {0.5, 1.0, 3.7, 9.2}) {
    const double est = integrate_gk15([&](double) { return rate; }, 0.0, t, 7);
    CHECK(std::abs(est - rate * t) / (rate * t) <= 1e-8);
  }
}

TEST_CASE("Weibull hazard matches the closed-form cumulative hazard") {
  // h(t) = (k/s) (t/s)^(k-1), H(t) = (t/s)^k.
  const double k = 2.5, s = 4.0;
  auto hz = [&](double t) { return (k / s) * std::pow(t / s, k - 1.0); };
  for (double t : {0.25, 1.0, 2.5, 6.0, 11.0}) {
    const double est = integrate_gk15(hz, 0.0, t, 7);
    const double truth = std::pow(t / s, k);
    CHECK(std::abs(est - truth) / truth <= 1e-8);
  }
}

TEST_CASE("exponentiated linear log-hazard") {
  // h(t) = exp(a + b t) has H(t) = (exp(a + b t) - exp(a)) / b.
  const double a = -1.2, b = 0.4;
  const double t = 5.0;
  const double est = integrate_gk15([&](double u) { return std::exp(a + b * u); }, 0.0, t, 7);
  const double truth = (std::exp(a + b * t) - std::exp(a)) / b;
  CHECK(std::abs(est - truth) / truth <= 1e-10);
}

TEST_CASE("quadrature grid reproduces the segmented rule") {
  Eigen::VectorXd nodes, weights;
  quadrature_grid(6.0, 7, nodes, weights);
  REQUIRE(nodes.size() == 105);
  REQUIRE(weights.size() == 105);
  // Weights sum to the interval length.
  CHECK(weights.sum() == doctest::Approx(6.0).epsilon(1e-13));
  // Same value as integrate_gk15 for a smooth integrand.
  auto fn = [](double t) { return std::sin(t) + 2.0; };
  double grid_val = 0.0;
  for (int i = 0; i < nodes.size(); ++i) grid_val += weights[i] * fn(nodes[i]);
  CHECK(grid_val == doctest::Approx(integrate_gk15(fn, 0.0, 6.0, 7)).epsilon(1e-14));
  // Nodes lie inside [0, 6] and are ordered within segments.
  CHECK(nodes.minCoeff() > 0.0);
  CHECK(nodes.maxCoeff() < 6.0);
}
