// Acceptance gate: runs every release criterion with pinned tolerances and
// prints exactly one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jointfit/diagnostics.hpp"
#include "jointfit/jointmodel.hpp"
#include "jointfit/lmm.hpp"
#include "jointfit/parallel.hpp"
#include "jointfit/quadrature.hpp"
#include "jointfit/rng.hpp"
#include "jointfit/simulate.hpp"
#include "jointfit/survival.hpp"

using namespace jointfit;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " " << name << " (" << detail << ")"
            << std::endl;
  if (!pass) ++g_failures;
}

bool within(double value, double target, double tol) {
  return std::abs(value - target) <= tol;
}

// ---------------------------------------------------------------------------
// 1. Interpretive hazard arithmetic
// ---------------------------------------------------------------------------

void check_interpretive_arithmetic() {
  bool ok = true;
  std::ostringstream d;
  auto probe = [&](double value, double target, double tol, const char* label) {
    if (!within(value, target, tol)) {
      ok = false;
      d << " " << label << "=" << value << "!=" << target;
    }
  };
  probe(hazard_ratio(0.519), 1.680, 0.001, "hr1");
  probe(hazard_ratio(0.445), 1.560, 0.001, "hr2");
  probe(percent_risk_change(-0.026), 2.6, 0.05, "prc1");
  probe(percent_risk_change(-0.026, 3.684), 9.13, 0.05, "prc2");
  probe(percent_risk_change(-1.6 * 0.133), 19.2, 0.3, "prc3");
  probe(percent_risk_change(-1.641 * std::sqrt(0.080)) / 100.0, 0.371, 0.001, "prc4");
  probe((hazard_ratio(0.498) - 1.0) * 100.0, 64.5, 0.1, "pct-incr");
  report("interpretive-arithmetic", ok, ok ? "7 identities within tolerance" : d.str());
}

// ---------------------------------------------------------------------------
// 2. Evidence categories
// ---------------------------------------------------------------------------

void check_evidence_categories() {
  const bool ok = kass_raftery_category(0.0) == "not worth mentioning" &&
                  kass_raftery_category(2.0) == "not worth mentioning" &&
                  kass_raftery_category(2.0 + 1e-9) == "positive" &&
                  kass_raftery_category(6.0) == "positive" &&
                  kass_raftery_category(6.0 + 1e-9) == "strong" &&
                  kass_raftery_category(10.0) == "strong" &&
                  kass_raftery_category(10.0 + 1e-9) == "very strong" &&
                  kass_raftery_category(1e300) == "very strong";
  report("evidence-categories", ok, "boundary probes {0,2,6,10,inf}");
}

// ---------------------------------------------------------------------------
// 3. LMM oracle
// ---------------------------------------------------------------------------

Table simulate_lmm_table(int n_subjects, int n_visits, const Eigen::VectorXd& beta,
                         const Eigen::MatrixXd& D, double sigma2, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(D).matrixL();
  Table t;
  const int n = n_subjects * n_visits;
  Eigen::VectorXd time(n), x(n), y(n);
  for (int i = 0; i < n_subjects; ++i) {
    Eigen::VectorXd z(D.rows());
    for (int k = 0; k < z.size(); ++k) z[k] = rng.normal();
    const Eigen::VectorXd b = L * z;
    const double xi = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (int v = 0; v < n_visits; ++v) {
      const int r = i * n_visits + v;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "s%05d", i);
      t.ids.push_back(buf);
      time[r] = v;
      x[r] = xi;
      y[r] = beta[0] + beta[1] * v + beta[2] * xi + b[0] + b[1] * v +
             std::sqrt(sigma2) * rng.normal();
    }
  }
  t.add("time", time);
  t.add("x", x);
  t.add("y", y);
  return t;
}

void check_lmm_oracle() {
  bool ok = true;
  std::ostringstream d;

  // Closed forms on an intercept-only model.
  Rng rng(3);
  Eigen::VectorXd y(60);
  for (int i = 0; i < y.size(); ++i) y[i] = rng.normal(1.0, 2.0);
  Table iid;
  for (int i = 0; i < y.size(); ++i) iid.ids.push_back("s" + std::to_string(i));
  iid.add("y", y);
  const double mean = y.mean();
  const double sse = (y.array() - mean).square().sum();
  const LmmFit ml =
      fit_lmm(parse_formula("y ~ 1"), parse_formula("~ 0"), iid, FitMethod::ML);
  const LmmFit reml =
      fit_lmm(parse_formula("y ~ 1"), parse_formula("~ 0"), iid, FitMethod::REML);
  if (!within(ml.sigma2, sse / 60, 1e-10)) { ok = false; d << " ml-sigma2"; }
  if (!within(reml.sigma2, sse / 59, 1e-10)) { ok = false; d << " reml-sigma2"; }
  if (!within(ml.beta[0], mean, 1e-10)) { ok = false; d << " ml-beta"; }

  // Simulate-and-recover, every parameter within 3 Monte-Carlo SEs.
  Eigen::VectorXd beta(3);
  beta << 2.0, -0.4, 0.7;
  Eigen::MatrixXd D(2, 2);
  D << 0.8, 0.1, 0.1, 0.2;
  const double sigma2 = 0.25;
  const int N = 500, V = 4;
  const Table t = simulate_lmm_table(N, V, beta, D, sigma2, 99);
  const LmmFit fit = fit_lmm(parse_formula("y ~ time + x"),
                             parse_formula("~ time | id"), t, FitMethod::REML);
  for (int j = 0; j < 3; ++j) {
    if (std::abs(fit.beta[j] - beta[j]) >= 3 * std::sqrt(fit.vcov_beta(j, j))) {
      ok = false;
      d << " beta" << j;
    }
  }
  if (std::abs(fit.sigma2 - sigma2) >= 3 * sigma2 * std::sqrt(2.0 / (N * V))) {
    ok = false;
    d << " sigma2";
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double sd = std::sqrt((D(i, i) * D(j, j) + D(i, j) * D(i, j)) / N);
      if (std::abs(fit.D(i, j) - D(i, j)) >= 3 * sd) {
        ok = false;
        d << " D" << i << j;
      }
    }
  }
  report("lmm-oracle", ok,
         ok ? "closed forms to 1e-10; 500x4 recovery within 3 SE" : d.str());
}

// ---------------------------------------------------------------------------
// 4. Cox oracle + proportional-hazards test calibration
// ---------------------------------------------------------------------------

std::vector<SurvivalRecord> cox_records(const std::vector<double>& times,
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
    rec.baseline_covariates["x"] = x[i];
    r.push_back(rec);
  }
  return r;
}

double breslow_pl(const std::vector<double>& times, const std::vector<int>& status,
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

void check_cox_oracle() {
  bool ok = true;
  std::ostringstream d;

  const std::vector<double> times = {1.0, 2.5, 3.0, 4.0, 5.5, 7.0};
  const std::vector<int> status = {1, 1, 0, 1, 1, 0};
  const std::vector<double> x = {1.2, -0.5, 0.3, 0.8, -1.1, 0.4};
  const CoxFit fit = fit_cox(cox_records(times, status, x), parse_formula("~ x"));
  // Golden-section maximization of the independent partial likelihood.
  double lo = -5.0, hi = 5.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = -breslow_pl(times, status, x, a), fb = -breslow_pl(times, status, x, b);
  while (hi - lo > 1e-10) {
    if (fa < fb) {
      hi = b; b = a; fb = fa;
      a = hi - phi * (hi - lo);
      fa = -breslow_pl(times, status, x, a);
    } else {
      lo = a; a = b; fa = fb;
      b = lo + phi * (hi - lo);
      fb = -breslow_pl(times, status, x, b);
    }
  }
  const double oracle = 0.5 * (lo + hi);
  if (std::abs(fit.gamma[0] - oracle) > 2e-4) {
    ok = false;
    d << " gamma=" << fit.gamma[0] << " oracle=" << oracle;
  }

  // Null calibration of the global proportional-hazards test at the 5% level.
  int rejections = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = Rng::derive(1000, rep, 0);
    std::vector<double> tt, xx;
    std::vector<int> ss;
    for (int i = 0; i < 100; ++i) {
      xx.push_back(rng.normal());
      tt.push_back(rng.exponential(0.3));  // hazard free of x: H0 true
      ss.push_back(rng.bernoulli(0.85) ? 1 : 0);
    }
    const CoxFit f = fit_cox(cox_records(tt, ss, xx), parse_formula("~ x"));
    if (schoenfeld_test(f, TimeTransform::Km).global.p < 0.05) ++rejections;
  }
  const double rate = 100.0 * rejections / reps;
  if (rate < 3.0 || rate > 7.0) {
    ok = false;
    d << " null-rejection-rate=" << rate << "%";
  }
  std::ostringstream info;
  info << "grid oracle to 2e-4; null rejection rate " << rate << "% in [3,7]";
  report("cox-oracle", ok, ok ? info.str() : d.str());
}

// ---------------------------------------------------------------------------
// 5. Kaplan-Meier exactness
// ---------------------------------------------------------------------------

void check_km_exactness() {
  bool ok = true;
  std::ostringstream d;

  Rng rng(21);
  std::vector<double> times;
  std::vector<int> status;
  std::vector<double> x;
  for (int i = 0; i < 80; ++i) {
    times.push_back(rng.exponential(0.3));
    status.push_back(1);
    x.push_back(0.0);
  }
  const auto curves = kaplan_meier(cox_records(times, status, x));
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < curves[0].times.size(); ++k) {
    const double emp =
        static_cast<double>(std::count_if(sorted.begin(), sorted.end(),
                                          [&](double t) { return t > curves[0].times[k]; })) /
        sorted.size();
    if (std::abs(curves[0].survival[k] - emp) > 1e-14) { ok = false; d << " uncensored"; break; }
  }

  const auto cc = kaplan_meier(
      cox_records({1, 2, 3, 4, 5}, {1, 0, 1, 1, 0}, {0, 0, 0, 0, 0}));
  if (!(std::abs(cc[0].survival[0] - 4.0 / 5.0) < 1e-12 &&
        std::abs(cc[0].survival[1] - 8.0 / 15.0) < 1e-12 &&
        std::abs(cc[0].survival[2] - 4.0 / 15.0) < 1e-12)) {
    ok = false;
    d << " censored-hand-case";
  }
  report("km-exactness", ok, ok ? "empirical match exact; censored case to 1e-12" : d.str());
}

// ---------------------------------------------------------------------------
// 6. Analytic longitudinal slope vs finite differences
// ---------------------------------------------------------------------------

void check_derivative_design() {
  Rng rng(10);
  Table tab;
  Eigen::VectorXd time(300), x(300), y(300);
  for (int i = 0; i < 300; ++i) {
    tab.ids.push_back("s");
    time[i] = rng.uniform(0.0, 8.0);
    x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = rng.normal();
  }
  tab.add("t", time);
  tab.add("x", x);
  tab.add("y", y);

  DesignBuilder builder(parse_formula("y ~ t + t^2 + x + t:x + ns(t, 4)"));
  builder.fit(tab);
  const DerivativeForm form = builder.derivative("t");
  Eigen::VectorXd beta(builder.n_columns());
  for (int j = 0; j < beta.size(); ++j) beta[j] = rng.normal();
  Eigen::VectorXd bsub(form.coef_indices.size());
  for (std::size_t k = 0; k < form.coef_indices.size(); ++k) {
    bsub[k] = beta[form.coef_indices[k]];
  }
  auto one_row = [&](double t, double xv) {
    Table tt;
    tt.ids = {"a"};
    tt.add("t", Eigen::VectorXd::Constant(1, t));
    tt.add("x", Eigen::VectorXd::Constant(1, xv));
    tt.add("y", Eigen::VectorXd::Zero(1));
    return tt;
  };

  int bad = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double t = rng.uniform(0.5, 7.5);
    const double xv = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double h = 1e-5;
    const double mu_p = builder.build(one_row(t + h, xv)).values.row(0).dot(beta);
    const double mu_m = builder.build(one_row(t - h, xv)).values.row(0).dot(beta);
    const double fd = (mu_p - mu_m) / (2 * h);
    const double an = builder.build_derivative(form, one_row(t, xv)).values.row(0).dot(bsub);
    const double rel = std::abs(an - fd) / std::max(std::abs(fd), 1.0);
    worst = std::max(worst, rel);
    if (rel > 1e-6) ++bad;
  }
  std::ostringstream info;
  info << "1000 points, worst relative error " << worst;
  report("derivative-design", bad == 0, info.str());
}

// ---------------------------------------------------------------------------
// 7. Quadrature against closed-form cumulative hazards
// ---------------------------------------------------------------------------

void check_quadrature() {
  bool ok = true;
  std::ostringstream d;
  for (double t : {0.5, 2.0, 6.0, 11.0}) {
    const double c = integrate_gk15([](double) { return 0.37; }, 0.0, t, 7);
    if (std::abs(c - 0.37 * t) / (0.37 * t) > 1e-8) { ok = false; d << " constant@" << t; }
    const double k = 2.5, s = 4.0;
    const double w = integrate_gk15(
        [&](double u) { return (k / s) * std::pow(u / s, k - 1.0); }, 0.0, t, 7);
    const double truth = std::pow(t / s, k);
    if (std::abs(w - truth) / truth > 1e-8) { ok = false; d << " weibull@" << t; }
  }
  report("quadrature", ok, ok ? "constant + Weibull hazards <= 1e-8 relative" : d.str());
}

// ---------------------------------------------------------------------------
// 8. Conjugate sigma^2 posterior on a survival-free model
// ---------------------------------------------------------------------------

void check_conjugate_sigma2() {
  // Model: y ~ N(0, sigma^2), no fixed effects, no random effects, no
  // survival part. The only sampled parameter is sigma^2 and its Gibbs draws
  // come from the exact inverse-Gamma posterior.
  Rng rng(8);
  const double sigma2_true = 0.49;
  LongitudinalData ld;
  SurvivalData sd;
  double sse = 0.0;
  int n = 0;
  for (int i = 0; i < 100; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%03d", i);
    for (int v = 0; v < 4; ++v) {
      LongitudinalRecord r;
      r.subject_id = buf;
      r.time = v;
      r.response = std::sqrt(sigma2_true) * rng.normal();
      sse += r.response * r.response;
      ++n;
      ld.records.push_back(r);
    }
    SurvivalRecord s;
    s.subject_id = buf;
    s.event_time = 100.0;
    s.event = false;
    sd.records.push_back(s);
  }
  const JointDataset data = join_datasets(ld, sd);

  JointModelSpec spec;
  spec.longitudinal = fit_lmm(parse_formula("y ~ 0"), parse_formula("~ 0"),
                              longitudinal_table(data), FitMethod::ML);
  spec.time_var = "time";
  const JointModel model(spec, data);

  McmcConfig cfg;
  cfg.n_iter = 6000;
  cfg.adapt = 500;
  cfg.burnin = 1000;
  cfg.thin = 2;
  cfg.seed = 11;
  const PosteriorChains chains = model.run_mcmc(cfg);
  const int col = chains.sigma2_index;
  const Eigen::VectorXd draws = chains.draws.col(col);

  const double shape = 0.01 + 0.5 * n;
  const double rate = 0.01 + 0.5 * sse;
  const double post_mean = rate / (shape - 1.0);
  const double post_sd = rate / ((shape - 1.0) * std::sqrt(shape - 2.0));
  const double mcse = post_sd / std::sqrt(effective_sample_size(draws));
  const double err = std::abs(draws.mean() - post_mean);
  std::ostringstream info;
  info << "|mean - " << post_mean << "| = " << err << " vs 3*MCSE = " << 3 * mcse;
  report("conjugate-sigma2", err < 3 * mcse, info.str());
}

// ---------------------------------------------------------------------------
// 9. Joint recovery across association structures
// ---------------------------------------------------------------------------

Generator recovery_generator(AssociationType type, std::uint64_t seed) {
  Generator g;
  g.n_subjects = 300;
  g.seed = seed;
  g.visit_times = {0.0, 1.0, 2.0};
  g.censor_time = 5.5;
  g.covariates = {{"group", CovariateSpec::Kind::Bernoulli, 0.5, 1.0}};
  g.fixed = "y ~ time + group";
  g.random = "~ time | id";
  g.survival_covariates = {"group"};
  g.beta = Eigen::Vector3d(2.0, -0.5, 0.8);
  g.sigma2 = 0.25;
  g.D = Eigen::MatrixXd(2, 2);
  g.D << 0.5, 0.05, 0.05, 0.1;
  g.gamma = Eigen::VectorXd::Constant(1, 0.4);
  g.association.type = type;
  switch (type) {
    case AssociationType::CurrentValue:
      g.alpha = Eigen::VectorXd::Constant(1, -0.3);
      break;
    case AssociationType::CurrentValueSlope:
      g.alpha = Eigen::Vector2d(-0.3, 0.6);
      break;
    case AssociationType::SharedRandomEffects:
      g.alpha = Eigen::Vector2d(-0.3, 0.5);
      break;
  }
  g.baseline.kind = BaselineHazardSpec::Kind::Weibull;
  g.baseline.shape = 1.4;
  g.baseline.scale = 6.0;
  return g;
}

PosteriorChains fit_joint_once(const JointDataset& data, AssociationType type,
                               const McmcConfig& cfg) {
  JointModelSpec spec;
  spec.longitudinal = fit_lmm(parse_formula("y ~ time + group"),
                              parse_formula("~ time | id"),
                              longitudinal_table(data), FitMethod::REML);
  spec.survival = fit_cox(data.survival.records, parse_formula("~ group"));
  spec.association.type = type;
  spec.time_var = "time";
  const JointModel model(spec, data);
  return model.run_mcmc(cfg);
}

void check_joint_recovery() {
  bool ok = true;
  std::ostringstream d, info;
  const int reps = 20;
  const struct { AssociationType type; const char* name; } structures[] = {
      {AssociationType::CurrentValue, "value"},
      {AssociationType::CurrentValueSlope, "value-slope"},
      {AssociationType::SharedRandomEffects, "shared-re"},
  };
  for (const auto& s : structures) {
    const Generator proto = recovery_generator(s.type, 0);
    const int na = static_cast<int>(proto.alpha.size());
    std::vector<int> covered(na, 0);
    for (int rep = 0; rep < reps; ++rep) {
      Generator g = recovery_generator(s.type, 5000 + 17 * rep);
      const auto sim = simulate_joint(g);
      McmcConfig cfg;
      cfg.n_iter = 9000;
      cfg.adapt = 3000;
      cfg.burnin = 3000;
      cfg.thin = 3;
      cfg.seed = 300 + rep;
      cfg.store_random_effects = false;
      const PosteriorChains chains = fit_joint_once(sim.data, s.type, cfg);
      const auto rows = summarize(chains);
      for (int k = 0; k < na; ++k) {
        const auto& r = rows[chains.alpha_offset + k];
        if (r.lo <= g.alpha[k] && g.alpha[k] <= r.hi) ++covered[k];
      }
    }
    for (int k = 0; k < na; ++k) {
      info << " " << s.name << "[" << k << "]=" << covered[k] << "/" << reps;
      if (covered[k] < 18) {
        ok = false;
        d << " " << s.name << "[" << k << "]=" << covered[k] << "/" << reps;
      }
    }
  }
  report("joint-recovery", ok,
         (ok ? "95% CI coverage per association parameter:" + info.str()
             : "coverage below 18/20:" + d.str()));
}

// ---------------------------------------------------------------------------
// 10. Model-comparison calibration
// ---------------------------------------------------------------------------

void check_model_comparison() {
  int wins = 0;
  const int reps = 10;
  for (int rep = 0; rep < reps; ++rep) {
    Generator g = recovery_generator(AssociationType::CurrentValueSlope, 9000 + 23 * rep);
    g.n_subjects = 200;
    g.visit_times = {0.0, 1.0, 2.0, 3.0};
    g.D << 0.5, 0.05, 0.05, 0.4;
    g.alpha = Eigen::Vector2d(-0.3, 2.0);
    const auto sim = simulate_joint(g);

    McmcConfig cfg;
    cfg.n_iter = 9000;
    cfg.adapt = 3000;
    cfg.burnin = 3000;
    cfg.thin = 3;
    cfg.seed = 70 + rep;

    JointModelSpec spec;
    spec.longitudinal = fit_lmm(parse_formula("y ~ time + group"),
                                parse_formula("~ time | id"),
                                longitudinal_table(sim.data), FitMethod::REML);
    spec.survival = fit_cox(sim.data.survival.records, parse_formula("~ group"));
    spec.time_var = "time";

    spec.association.type = AssociationType::CurrentValueSlope;
    const JointModel m_slope(spec, sim.data);
    const FitQuality fq_slope = dic_lpml(m_slope, m_slope.run_mcmc(cfg));

    spec.association.type = AssociationType::CurrentValue;
    const JointModel m_value(spec, sim.data);
    const FitQuality fq_value = dic_lpml(m_value, m_value.run_mcmc(cfg));

    if (fq_slope.dic < fq_value.dic) ++wins;
  }
  std::ostringstream info;
  info << "true value+slope model had lowest DIC in " << wins << "/" << reps;
  report("model-comparison", wins >= 8, info.str());
}

// ---------------------------------------------------------------------------
// 11. Determinism
// ---------------------------------------------------------------------------

void check_determinism() {
  Generator g = recovery_generator(AssociationType::CurrentValue, 77);
  g.n_subjects = 60;
  const auto sim = simulate_joint(g);
  McmcConfig cfg;
  cfg.n_iter = 800;
  cfg.adapt = 200;
  cfg.burnin = 200;
  cfg.thin = 2;
  cfg.seed = 5;

  set_max_threads(1);
  const PosteriorChains a = fit_joint_once(sim.data, AssociationType::CurrentValue, cfg);
  const PosteriorChains b = fit_joint_once(sim.data, AssociationType::CurrentValue, cfg);
  set_max_threads(4);
  const PosteriorChains c = fit_joint_once(sim.data, AssociationType::CurrentValue, cfg);
  set_max_threads(0);

  const bool rerun_equal = (a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0;
  const bool threads_equal = (a.draws - c.draws).cwiseAbs().maxCoeff() == 0.0;
  report("determinism", rerun_equal && threads_equal,
         std::string("rerun ") + (rerun_equal ? "identical" : "DIFFERS") +
             "; threads 1 vs 4 " + (threads_equal ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
  check_interpretive_arithmetic();
  check_evidence_categories();
  check_lmm_oracle();
  check_cox_oracle();
  check_km_exactness();
  check_derivative_design();
  check_quadrature();
  check_conjugate_sigma2();
  check_joint_recovery();
  check_model_comparison();
  check_determinism();
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
