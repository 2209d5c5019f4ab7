#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "jointfit/jointmodel.hpp"
#include "jointfit/parallel.hpp"
#include "jointfit/simulate.hpp"

using namespace jointfit;

namespace {

Generator small_generator(std::uint64_t seed) {
  Generator g;
  g.n_subjects = 40;
  g.seed = seed;
  g.visit_times = {0.0, 1.0, 2.0, 3.0};
  g.censor_time = 5.0;
  g.covariates = {{"group", CovariateSpec::Kind::Bernoulli, 0.5, 1.0}};
  g.fixed = "y ~ time + group";
  g.random = "~ time | id";
  g.survival_covariates = {"group"};
  g.beta = Eigen::Vector3d(2.0, -0.5, 0.8);
  g.sigma2 = 0.25;
  g.D = Eigen::MatrixXd(2, 2);
  g.D << 0.5, 0.05, 0.05, 0.1;
  g.gamma = Eigen::VectorXd::Constant(1, 0.4);
  g.alpha = Eigen::VectorXd::Constant(1, -0.3);
  g.association.type = AssociationType::CurrentValue;
  g.baseline.kind = BaselineHazardSpec::Kind::Weibull;
  g.baseline.shape = 1.4;
  g.baseline.scale = 6.0;
  return g;
}

JointModelSpec make_spec(const JointDataset& data, AssociationStructure assoc,
                         const std::string& random = "~ time | id") {
  JointModelSpec spec;
  spec.longitudinal = fit_lmm(parse_formula("y ~ time + group"), parse_formula(random),
                              longitudinal_table(data), FitMethod::REML);
  spec.survival = fit_cox(data.survival.records, parse_formula("~ group"));
  spec.association = assoc;
  spec.time_var = "time";
  return spec;
}

}  // namespace

TEST_CASE("parameter labels per association structure") {
  const auto sim = simulate_joint(small_generator(11));

  SUBCASE("current value") {
    const JointModel model(make_spec(sim.data, {AssociationType::CurrentValue, {}}),
                           sim.data);
    const auto labels = model.parameter_labels();
    // 3 beta + sigma2 + 3 D + 1 gamma + 1 alpha + 9 baseline + tauBs
    REQUIRE(labels.size() == 3 + 1 + 3 + 1 + 1 + 9 + 1);
    CHECK(labels[0] == "(Intercept)");
    CHECK(labels[1] == "time");
    CHECK(labels[2] == "group");
    CHECK(labels[3] == "sigma2");
    CHECK(labels[4] == "D[1, 1]");
    CHECK(labels[5] == "D[2, 1]");
    CHECK(labels[6] == "D[2, 2]");
    CHECK(labels[7] == "group");
    CHECK(labels[8] == "Assoct");
    CHECK(labels[9] == "logh0.b1");
    CHECK(labels[17] == "logh0.b9");
    CHECK(labels[18] == "tauBs");
    CHECK(model.n_association() == 1);
  }

  SUBCASE("current value and slope") {
    const JointModel model(
        make_spec(sim.data, {AssociationType::CurrentValueSlope, {}}), sim.data);
    const auto labels = model.parameter_labels();
    CHECK(labels[8] == "Assoct");
    CHECK(labels[9] == "AssoctE");
    CHECK(model.n_association() == 2);
  }

  SUBCASE("shared random effects") {
    const JointModel model(
        make_spec(sim.data, {AssociationType::SharedRandomEffects, {}}), sim.data);
    const auto labels = model.parameter_labels();
    CHECK(labels[8] == "Assoct:(Intercept)");
    CHECK(labels[9] == "Assoct:time");
    CHECK(model.n_association() == 2);
  }

  SUBCASE("interaction transform") {
    AssociationStructure assoc{AssociationType::CurrentValue,
                               TransformFunction{"group"}};
    const JointModel model(make_spec(sim.data, assoc), sim.data);
    const auto labels = model.parameter_labels();
    CHECK(labels[8] == "Assoct");
    CHECK(labels[9] == "Assoct:group");
    CHECK(model.n_association() == 2);
  }
}

TEST_CASE("hazard is the derivative of the cumulative hazard") {
  const auto sim = simulate_joint(small_generator(12));
  const JointModel model(make_spec(sim.data, {AssociationType::CurrentValue, {}}),
                         sim.data);
  JointParameters p = model.initial_values();
  // Perturb so the association actually contributes.
  p.alpha[0] = -0.4;
  for (int i = 0; i < p.b.rows(); ++i) p.b(i, 0) += 0.1;

  for (int subject : {0, 7, 23}) {
    CHECK(model.cumulative_hazard(subject, 0.0, p) == doctest::Approx(0.0));
    double prev = 0.0;
    for (double t : {0.5, 1.5, 2.5, 3.5}) {
      const double H = model.cumulative_hazard(subject, t, p);
      CHECK(H > prev);  // strictly increasing
      prev = H;
      const double h = 1e-5;
      const double fd = (model.cumulative_hazard(subject, t + h, p) -
                         model.cumulative_hazard(subject, t - h, p)) /
                        (2 * h);
      CHECK(model.hazard(subject, t, p) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("subject log-likelihoods sum to the total") {
  const auto sim = simulate_joint(small_generator(13));
  for (auto type : {AssociationType::CurrentValue, AssociationType::CurrentValueSlope,
                    AssociationType::SharedRandomEffects}) {
    const JointModel model(make_spec(sim.data, {type, {}}), sim.data);
    JointParameters p = model.initial_values();
    p.alpha.setConstant(-0.2);
    const Eigen::VectorXd per = model.subject_loglik(p);
    REQUIRE(per.size() == model.n_subjects());
    const double total =
        model.log_likelihood_longitudinal(p) + model.log_likelihood_survival(p);
    CHECK(per.sum() == doctest::Approx(total).epsilon(1e-9));
    CHECK(std::isfinite(model.log_posterior(p)));
  }
}

TEST_CASE("MCMC is deterministic in the seed and the thread count") {
  const auto sim = simulate_joint(small_generator(14));
  const JointModel model(make_spec(sim.data, {AssociationType::CurrentValue, {}}),
                         sim.data);
  McmcConfig cfg;
  cfg.n_iter = 400;
  cfg.adapt = 100;
  cfg.burnin = 100;
  cfg.thin = 2;
  cfg.seed = 7;

  set_max_threads(1);
  const PosteriorChains a = model.run_mcmc(cfg);
  const PosteriorChains b = model.run_mcmc(cfg);
  set_max_threads(4);
  const PosteriorChains c = model.run_mcmc(cfg);
  set_max_threads(0);

  REQUIRE(a.draws.rows() == cfg.n_draws());
  REQUIRE(a.draws.cols() == static_cast<int>(model.parameter_labels().size()));
  CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() == 0.0);

  // A different seed gives a different chain.
  McmcConfig cfg2 = cfg;
  cfg2.seed = 8;
  const PosteriorChains d = model.run_mcmc(cfg2);
  CHECK((a.draws - d.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("chain layout, unpacking and summaries are consistent") {
  const auto sim = simulate_joint(small_generator(15));
  const JointModel model(make_spec(sim.data, {AssociationType::CurrentValue, {}}),
                         sim.data);
  McmcConfig cfg;
  cfg.n_iter = 300;
  cfg.adapt = 100;
  cfg.burnin = 100;
  cfg.thin = 2;
  const PosteriorChains chains = model.run_mcmc(cfg);

  CHECK(chains.n_beta == 3);
  CHECK(chains.q == 2);
  CHECK(chains.n_d == 3);
  CHECK(chains.labels == model.parameter_labels());
  REQUIRE(static_cast<int>(chains.b_draws.size()) == chains.n_draws());

  const JointParameters p = chains.unpack(0);
  CHECK(p.beta.size() == 3);
  CHECK(p.D.rows() == 2);
  CHECK(p.D(0, 1) == p.D(1, 0));
  CHECK(p.b.rows() == model.n_subjects());
  CHECK(p.sigma2 > 0.0);
  CHECK(std::isfinite(model.log_posterior(p)));

  const auto rows = summarize(chains);
  REQUIRE(rows.size() == chains.labels.size());
  for (const auto& r : rows) {
    CHECK(r.lo <= r.mean);
    CHECK(r.mean <= r.hi);
  }
  for (const auto& [name, rate] : chains.acceptance) {
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
  }
}

TEST_CASE("value-slope association works with a random intercept only") {
  // The random part has no time derivative; the slope channel must still work
  // through the fixed effects.
  Generator g = small_generator(16);
  g.random = "~ 1 | id";
  g.D = Eigen::MatrixXd::Constant(1, 1, 0.5);
  g.alpha = Eigen::Vector2d(-0.2, 0.1);
  g.association.type = AssociationType::CurrentValueSlope;
  const auto sim = simulate_joint(g);

  const JointModel model(
      make_spec(sim.data, {AssociationType::CurrentValueSlope, {}}, "~ 1 | id"),
      sim.data);
  JointParameters p = model.initial_values();
  p.alpha << -0.2, 0.1;
  CHECK(std::isfinite(model.log_posterior(p)));

  McmcConfig cfg;
  cfg.n_iter = 200;
  cfg.adapt = 50;
  cfg.burnin = 50;
  cfg.thin = 5;
  const PosteriorChains chains = model.run_mcmc(cfg);
  CHECK(chains.draws.allFinite());
}
