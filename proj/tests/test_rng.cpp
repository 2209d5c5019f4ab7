#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "jointfit/parallel.hpp"
#include "jointfit/rng.hpp"

using namespace jointfit;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("derived streams are reproducible and distinct") {
  Rng a = Rng::derive(7, 3, 11);
  Rng b = Rng::derive(7, 3, 11);
  Rng c = Rng::derive(7, 4, 11);
  Rng d = Rng::derive(7, 3, 12);
  bool all_equal_c = true, all_equal_d = true;
  for (int i = 0; i < 50; ++i) {
    const auto va = a();
    CHECK(va == b());
    if (va != c()) all_equal_c = false;
    if (va != d()) all_equal_d = false;
  }
  CHECK_FALSE(all_equal_c);
  CHECK_FALSE(all_equal_d);
}

TEST_CASE("uniform moments") {
  Rng rng(1);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.005);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal moments") {
  Rng rng(2);
  const int n = 200000;
  double sum = 0, sum2 = 0, sum3 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
    sum3 += z * z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
  CHECK(std::abs(sum3 / n) < 0.05);
}

TEST_CASE("gamma moments") {
  Rng rng(3);
  const int n = 100000;
  for (double shape : {0.5, 1.0, 3.5}) {
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape, 2.0);
      CHECK(g > 0.0);
      sum += g;
      sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - shape / 2.0) < 0.05 * std::max(shape / 2.0, 0.25));
    CHECK(std::abs(var - shape / 4.0) < 0.08 * std::max(shape / 4.0, 0.25));
  }
}

TEST_CASE("exponential mean") {
  Rng rng(4);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += rng.exponential(0.25);
  CHECK(std::abs(sum / n - 4.0) < 0.1);
}

TEST_CASE("parallel_for covers every index exactly once") {
  for (int threads : {1, 3, 8}) {
    set_max_threads(threads);
    const std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    for (auto& h : hits) h = 0;
    parallel_for(n, [&](std::size_t i) { hits[i]++; });
    for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
  }
  set_max_threads(0);
}

TEST_CASE("parallel results are thread-count invariant with derived streams") {
  auto run = [](int threads) {
    set_max_threads(threads);
    const std::size_t n = 64;
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) {
      Rng rng = Rng::derive(123, i + 1, 9);
      double s = 0;
      for (int k = 0; k < 20; ++k) s += rng.normal();
      out[i] = s;
    });
    return out;
  };
  const auto one = run(1);
  const auto four = run(4);
  set_max_threads(0);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == four[i]);
}
