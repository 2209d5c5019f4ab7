#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "jointfit/errors.hpp"
#include "jointfit/formula.hpp"
#include "jointfit/rng.hpp"
#include "jointfit/survival.hpp"

using namespace jointfit;

namespace {

std::vector<SurvivalRecord> make_records(const std::vector<double>& times,
                                         const std::vector<int>& status,
                                         const std::vector<double>& x) {
  std::vector<SurvivalRecord> r;
  for (std::size_t i = 0; i < times.size(); ++i) {
    SurvivalRecord rec;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%03zu", i);
    rec.subject_id = buf;
    rec.event_time = times[i];
    rec.event = status[i] != 0;
    if (!x.empty()) rec.baseline_covariates["x"] = x[i];
    r.push_back(rec);
  }
  return r;
}

// Independent Breslow partial log-likelihood for a single covariate,
// written from the definition (event terms minus log risk-set sums).
double breslow_oracle(const std::vector<double>& times, const std::vector<int>& status,
                      const std::vector<double>& x, double gamma) {
  double ll = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!status[i]) continue;
    double risk = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (times[j] >= times[i]) risk += std::exp(gamma * x[j]);
    }
    ll += gamma * x[i] - std::log(risk);
  }
  return ll;
}

}  // namespace

TEST_CASE("Kaplan-Meier equals the empirical survivor function without censoring") {
  Rng rng(21);
  std::vector<double> times;
  std::vector<int> status;
  for (int i = 0; i < 57; ++i) {
    times.push_back(rng.exponential(0.3));
    status.push_back(1);
  }
  const auto curves = kaplan_meier(make_records(times, status, {}));
  REQUIRE(curves.size() == 1);
  const auto& c = curves[0];
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    const double ecdf_surv =
        static_cast<double>(std::count_if(sorted.begin(), sorted.end(),
                                          [&](double t) { return t > c.times[k]; })) /
        sorted.size();
    CHECK(c.survival[k] == doctest::Approx(ecdf_surv).epsilon(1e-14));
  }
}

TEST_CASE("Kaplan-Meier hand-computed censored example") {
  // times: 1(event), 2(censored), 3(event), 4(event), 5(censored)
  // S(1) = 4/5; S(3) = 4/5 * 2/3 = 8/15; S(4) = 8/15 * 1/2 = 4/15.
  const auto curves =
      kaplan_meier(make_records({1, 2, 3, 4, 5}, {1, 0, 1, 1, 0}, {}));
  const auto& c = curves[0];
  REQUIRE(c.times == std::vector<double>{1, 3, 4});
  CHECK(std::abs(c.survival[0] - 4.0 / 5.0) < 1e-12);
  CHECK(std::abs(c.survival[1] - 8.0 / 15.0) < 1e-12);
  CHECK(std::abs(c.survival[2] - 4.0 / 15.0) < 1e-12);
  CHECK(c.at_risk == std::vector<int>{5, 3, 2});
  CHECK(c.events == std::vector<int>{1, 1, 1});
}

TEST_CASE("Kaplan-Meier by group") {
  const auto curves = kaplan_meier(
      make_records({1, 2, 3, 4}, {1, 1, 1, 1}, {0, 0, 1, 1}), std::string("x"));
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].times.size() == 2);
  CHECK(curves[1].times.size() == 2);
}

TEST_CASE("Cox fit matches a grid-search oracle on a small dataset") {
  const std::vector<double> times = {1.0, 2.5, 3.0, 4.0, 5.5, 7.0};
  const std::vector<int> status = {1, 1, 0, 1, 1, 0};
  const std::vector<double> x = {1.2, -0.5, 0.3, 0.8, -1.1, 0.4};

  const CoxFit fit = fit_cox(make_records(times, status, x), parse_formula("~ x"));

  // Golden-section search on the oracle likelihood.
  double lo = -5.0, hi = 5.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = -breslow_oracle(times, status, x, a);
  double fb = -breslow_oracle(times, status, x, b);
  while (hi - lo > 1e-9) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = -breslow_oracle(times, status, x, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = -breslow_oracle(times, status, x, b);
    }
  }
  const double gamma_oracle = 0.5 * (lo + hi);
  CHECK(std::abs(fit.gamma[0] - gamma_oracle) < 2e-4);
  CHECK(fit.partial_loglik ==
        doctest::Approx(breslow_oracle(times, status, x, fit.gamma[0])).epsilon(1e-10));
}

TEST_CASE("Cox score vanishes at the optimum and vcov is the inverse information") {
  Rng rng(77);
  std::vector<double> times, x;
  std::vector<int> status;
  for (int i = 0; i < 120; ++i) {
    const double xi = rng.normal();
    x.push_back(xi);
    times.push_back(rng.exponential(0.2 * std::exp(0.5 * xi)));
    status.push_back(rng.bernoulli(0.8) ? 1 : 0);
  }
  const CoxFit fit = fit_cox(make_records(times, status, x), parse_formula("~ x"));
  CHECK(std::abs(fit.score[0]) < 1e-8);
  CHECK(fit.vcov(0, 0) == doctest::Approx(1.0 / fit.information(0, 0)).epsilon(1e-10));
  CHECK(fit.se[0] == doctest::Approx(std::sqrt(fit.vcov(0, 0))).epsilon(1e-12));
  // Recovers the truth loosely.
  CHECK(std::abs(fit.gamma[0] - 0.5) < 3 * fit.se[0]);
}

TEST_CASE("Breslow baseline reproduces the cumulative hazard scale") {
  // Null model data: cumulative baseline hazard at the largest event time
  // approximates the Nelson-Aalen estimate.
  Rng rng(5);
  std::vector<double> times, x;
  std::vector<int> status;
  for (int i = 0; i < 200; ++i) {
    times.push_back(rng.exponential(0.5));
    status.push_back(1);
    x.push_back(rng.normal());  // independent of the event times
  }
  const CoxFit fit = fit_cox(make_records(times, status, x), parse_formula("~ x"));
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  const double t_half = sorted[100];
  // True cumulative hazard at t = 0.5 * t: Lambda(t) = 0.5 t.
  const double est = fit.cumulative_baseline(t_half);
  CHECK(est == doctest::Approx(0.5 * t_half).epsilon(0.25));
}

TEST_CASE("divergent Cox fit is reported as a numerical failure") {
  // Perfectly separated data: covariate orders the event times exactly.
  std::vector<double> times, x;
  std::vector<int> status;
  for (int i = 0; i < 12; ++i) {
    times.push_back(i + 1.0);
    status.push_back(1);
    x.push_back(static_cast<double>(i));  // monotone: likelihood maximized at -inf
  }
  CHECK_THROWS_AS(fit_cox(make_records(times, status, x), parse_formula("~ x")),
                  NumericError);
}

TEST_CASE("stratified fit gives one baseline per stratum") {
  Rng rng(13);
  std::vector<SurvivalRecord> recs;
  for (int i = 0; i < 80; ++i) {
    SurvivalRecord r;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%03d", i);
    r.subject_id = buf;
    const double g = rng.bernoulli(0.5) ? 1.0 : 0.0;
    r.baseline_covariates["x"] = rng.normal();
    r.baseline_covariates["site"] = g;
    r.event_time = rng.exponential(g > 0 ? 0.6 : 0.2);
    r.event = true;
    recs.push_back(r);
  }
  const CoxFit fit = fit_cox(recs, parse_formula("~ x"), std::string("site"));
  CHECK(fit.baseline.size() == 2);
  CHECK(fit.strata_labels.size() == 2);
}

TEST_CASE("Schoenfeld test detects a strong proportional-hazards violation") {
  // Effect reverses over time: early events driven by x, late events by -x.
  Rng rng(1234);
  std::vector<double> times, x;
  std::vector<int> status;
  for (int i = 0; i < 300; ++i) {
    const double xi = rng.bernoulli(0.5) ? 1.0 : 0.0;
    x.push_back(xi);
    const double early = rng.exponential(std::exp(2.5 * xi));
    const double late = 2.0 + rng.exponential(std::exp(-2.5 * xi));
    times.push_back(rng.bernoulli(0.5) ? early : late);
    status.push_back(1);
  }
  const CoxFit fit = fit_cox(make_records(times, status, x), parse_formula("~ x"));
  const SchoenfeldTest test = schoenfeld_test(fit, TimeTransform::Km);
  CHECK(test.global.p < 0.01);
  CHECK(test.per_covariate.size() == 1);
}

TEST_CASE("Schoenfeld test accepts proportional hazards") {
  Rng rng(4321);
  std::vector<double> times, x;
  std::vector<int> status;
  for (int i = 0; i < 250; ++i) {
    const double xi = rng.normal();
    x.push_back(xi);
    times.push_back(rng.exponential(0.3 * std::exp(0.8 * xi)));
    status.push_back(1);
  }
  const CoxFit fit = fit_cox(make_records(times, status, x), parse_formula("~ x"));
  for (auto tt : {TimeTransform::Identity, TimeTransform::Rank, TimeTransform::Km}) {
    const SchoenfeldTest test = schoenfeld_test(fit, tt);
    CHECK(test.global.p > 1e-4);  // no catastrophic false positive
  }
}

TEST_CASE("interpretive hazard arithmetic") {
  CHECK(hazard_ratio(0.519) == doctest::Approx(1.680).epsilon(0.001));
  CHECK(percent_risk_change(-0.026) == doctest::Approx(2.57).epsilon(0.02));
  CHECK(percent_risk_change(-0.026, 3.684) == doctest::Approx(9.13).epsilon(0.005));
}

TEST_CASE("p-value formatting") {
  CHECK(format_p_value(0.4521) == "0.452");
  CHECK(format_p_value(0.0009) == "<0.001");
  CHECK(format_p_value(0.001) == "0.001");
}
