#include <doctest.h>

#include <cmath>

#include "jointfit/design.hpp"
#include "jointfit/errors.hpp"
#include "jointfit/formula.hpp"
#include "jointfit/rng.hpp"

using namespace jointfit;

namespace {

Table random_table(int n, std::uint64_t seed) {
  Rng rng(seed);
  Table t;
  Eigen::VectorXd time(n), x(n), y(n);
  for (int i = 0; i < n; ++i) {
    t.ids.push_back("s");
    time[i] = rng.uniform(0.0, 8.0);
    x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = rng.normal();
  }
  t.add("t", time);
  t.add("x", x);
  t.add("y", y);
  return t;
}

}  // namespace

TEST_CASE("design columns and labels") {
  Table tab = random_table(40, 5);
  DesignBuilder b(parse_formula("y ~ t + t^2 + x + t:x"));
  const DesignMatrix d = b.build(tab);
  REQUIRE(d.labels == std::vector<std::string>{"(Intercept)", "t", "t^2", "x", "t:x"});
  for (int i = 0; i < 40; ++i) {
    CHECK(d.values(i, 0) == 1.0);
    CHECK(d.values(i, 2) == doctest::Approx(tab.col("t")[i] * tab.col("t")[i]));
    CHECK(d.values(i, 4) == doctest::Approx(tab.col("t")[i] * tab.col("x")[i]));
  }
}

TEST_CASE("spline labels and frozen knots") {
  Table tab = random_table(80, 6);
  DesignBuilder b(parse_formula("y ~ ns(t, 3)"));
  b.fit(tab);
  const DesignMatrix d1 = b.build(tab);
  CHECK(d1.labels.size() == 4);
  CHECK(d1.labels[1].find("ns(t,3)#") == 0);

  // Building on new points reuses the fitted knots (same basis).
  Table tiny;
  tiny.ids = {"a"};
  tiny.add("t", Eigen::VectorXd::Constant(1, tab.col("t")[0]));
  tiny.add("x", Eigen::VectorXd::Zero(1));
  tiny.add("y", Eigen::VectorXd::Zero(1));
  const DesignMatrix d2 = b.build(tiny);
  for (int j = 0; j < 4; ++j) {
    CHECK(d2.values(0, j) == doctest::Approx(d1.values(0, j)).epsilon(1e-14));
  }
}

TEST_CASE("missing column and non-finite values are rejected") {
  Table tab = random_table(10, 7);
  DesignBuilder b(parse_formula("y ~ t + z"));
  CHECK_THROWS_AS(b.build(tab), ValidationError);

  Table bad = random_table(10, 8);
  Eigen::VectorXd v = bad.col("t");
  v[3] = std::nan("");
  bad.columns["t"] = v;
  DesignBuilder b2(parse_formula("y ~ t"));
  CHECK_THROWS_AS(b2.build(bad), NumericError);
}

TEST_CASE("time derivative matches finite differences") {
  // Covers polynomial, interaction and spline time dependence.
  Table fit_tab = random_table(300, 9);
  DesignBuilder fixed(parse_formula("y ~ t + t^2 + x + t:x + ns(t, 4)"));
  fixed.fit(fit_tab);
  const DerivativeForm form = fixed.derivative("t");
  CHECK_FALSE(form.empty());

  Rng rng(10);
  Eigen::VectorXd beta(fixed.n_columns());
  for (int j = 0; j < beta.size(); ++j) beta[j] = rng.normal();
  Eigen::VectorXd bsub(form.coef_indices.size());
  for (std::size_t k = 0; k < form.coef_indices.size(); ++k) {
    bsub[k] = beta[form.coef_indices[k]];
  }

  auto mu_at = [&](double t, double x) {
    Table tab;
    tab.ids = {"a"};
    tab.add("t", Eigen::VectorXd::Constant(1, t));
    tab.add("x", Eigen::VectorXd::Constant(1, x));
    tab.add("y", Eigen::VectorXd::Zero(1));
    return fixed.build(tab).values.row(0).dot(beta);
  };
  auto mud_at = [&](double t, double x) {
    Table tab;
    tab.ids = {"a"};
    tab.add("t", Eigen::VectorXd::Constant(1, t));
    tab.add("x", Eigen::VectorXd::Constant(1, x));
    tab.add("y", Eigen::VectorXd::Zero(1));
    return fixed.build_derivative(form, tab).values.row(0).dot(bsub);
  };

  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double t = rng.uniform(0.5, 7.5);
    const double x = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double h = 1e-5;
    const double fd = (mu_at(t + h, x) - mu_at(t - h, x)) / (2 * h);
    const double an = mud_at(t, x);
    const double denom = std::max(std::abs(fd), 1.0);
    CHECK(std::abs(an - fd) / denom <= 1e-6);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("derivative of a time-free formula is rejected") {
  DesignBuilder b(parse_formula("y ~ x"));
  CHECK_THROWS_AS(b.derivative("t"), ValidationError);
  DesignBuilder c(parse_formula("y ~ 1"));
  CHECK_THROWS_AS(c.derivative("t"), ValidationError);
}

TEST_CASE("derivative drops constants and keeps the chain structure") {
  DesignBuilder b(parse_formula("y ~ t + x + t:x"));
  const DerivativeForm form = b.derivative("t");
  // d/dt keeps t (-> 1) and t:x (-> x), drops intercept and x.
  REQUIRE(form.coef_indices.size() == 2);
  CHECK(form.coef_indices[0] == 1);  // position of t in the design
  CHECK(form.coef_indices[1] == 3);  // position of t:x
}
