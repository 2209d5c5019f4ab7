#ifndef JOINTFIT_JOINTMODEL_HPP
#define JOINTFIT_JOINTMODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jointfit/data.hpp"
#include "jointfit/design.hpp"
#include "jointfit/lmm.hpp"
#include "jointfit/spline.hpp"
#include "jointfit/survival.hpp"

namespace jointfit {

enum class AssociationType { CurrentValue, CurrentValueSlope, SharedRandomEffects };

// Interaction of the association feature with a baseline covariate: the
// association design becomes [x, x * covariate].
struct TransformFunction {
  std::string interacting_covariate;
};

struct AssociationStructure {
  AssociationType type = AssociationType::CurrentValue;
  std::optional<TransformFunction> transform;
};

struct JointPriors {
  double coef_sd = 10.0;          // Normal(0, sd^2) for beta, gamma, alpha
  double sigma2_shape = 0.01;     // inverse-Gamma for sigma^2
  double sigma2_rate = 0.01;
  double wishart_extra_df = 1.0;  // inverse-Wishart(q + extra, I) for D
  double taubs_shape = 1.0;       // Gamma for the penalty precision
  double taubs_rate = 0.005;
};

struct JointModelSpec {
  LmmFit longitudinal;
  std::optional<CoxFit> survival;  // absent: longitudinal-only Bayesian fit
  AssociationStructure association;
  JointPriors priors;
  std::string time_var;
  int baseline_df = 9;     // cubic B-spline basis size for log h0
  int quad_segments = 7;   // Gauss-Kronrod segments for the cumulative hazard
};

struct McmcConfig {
  int n_iter = 30000;
  int adapt = 3000;
  int burnin = 3000;
  int thin = 15;
  std::uint64_t seed = 1;
  bool store_random_effects = true;

  int n_draws() const { return (n_iter - burnin) / thin; }
};

// Full parameter state of the joint model, including per-subject random
// effects (rows of b).
struct JointParameters {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::MatrixXd D;
  Eigen::MatrixXd b;         // n_subjects x q
  Eigen::VectorXd gamma;
  Eigen::VectorXd alpha;
  Eigen::VectorXd theta_bs;  // log-baseline spline coefficients
  double taubs = 1.0;
};

struct PosteriorChains {
  std::vector<std::string> labels;
  Eigen::MatrixXd draws;  // n_draws x n_params

  // Column layout.
  int beta_offset = 0, n_beta = 0;
  int sigma2_index = -1;
  int d_offset = 0, n_d = 0, q = 0;  // packed lower triangle of D
  int gamma_offset = 0, n_gamma = 0;
  int alpha_offset = 0, n_alpha = 0;
  int bs_offset = 0, n_bs = 0;
  int taubs_index = -1;

  std::vector<Eigen::MatrixXd> b_draws;  // per retained draw, n_subjects x q
  std::map<std::string, double> acceptance;
  std::vector<std::string> warnings;  // e.g. blocks stuck after adaptation
  McmcConfig config;

  int n_draws() const { return static_cast<int>(draws.rows()); }
  JointParameters unpack(int draw) const;
};

struct SummaryRow {
  std::string name;
  double mean;
  double lo;  // 2.5% quantile
  double hi;  // 97.5% quantile
};

std::vector<SummaryRow> summarize(const PosteriorChains& chains);

// Prepared joint model: designs at visit times, event times and quadrature
// nodes are computed once; likelihood evaluations are matrix products.
class JointModel {
 public:
  JointModel(JointModelSpec spec, const JointDataset& data);
  ~JointModel();
  JointModel(JointModel&&) noexcept;

  const JointModelSpec& spec() const;
  int n_subjects() const;
  int n_random_effects() const;
  int n_association() const;
  std::vector<std::string> parameter_labels() const;
  const BSplineBasis& baseline_basis() const;

  JointParameters initial_values() const;

  double log_likelihood_longitudinal(const JointParameters& params) const;
  double log_likelihood_survival(const JointParameters& params) const;
  double log_posterior(const JointParameters& params) const;

  // Pointwise hazard for one subject; t in [0, max event time].
  double hazard(int subject, double t, const JointParameters& params) const;
  // Gauss-Kronrod cumulative hazard on [0, t].
  double cumulative_hazard(int subject, double t, const JointParameters& params) const;

  // Per-subject log-likelihood (longitudinal + survival) used by DIC/LPML.
  Eigen::VectorXd subject_loglik(const JointParameters& params) const;

  PosteriorChains run_mcmc(const McmcConfig& config) const;

  struct Impl;  // internal precomputed designs, shared with the sampler

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace jointfit

#endif
