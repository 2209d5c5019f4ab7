#ifndef JOINTFIT_LMM_HPP
#define JOINTFIT_LMM_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "jointfit/data.hpp"
#include "jointfit/design.hpp"
#include "jointfit/formula.hpp"

namespace jointfit {

enum class FitMethod { ML, REML };

struct LmmFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd D;        // random-effects covariance (symmetric PD)
  double sigma2 = 0.0;      // residual variance
  double loglik = 0.0;      // (restricted) log-likelihood at the optimum
  FitMethod method = FitMethod::ML;

  Eigen::MatrixXd vcov_beta;  // GLS covariance of beta at the optimum

  Eigen::MatrixXd blups;    // n_subjects x q, rows aligned with subject_ids
  std::vector<std::string> subject_ids;

  int n_obs = 0;
  int n_subjects = 0;
  int df = 0;               // fixed effects + unique D entries + 1 (sigma2)

  std::vector<std::string> fixed_labels;
  std::vector<std::string> random_labels;

  bool converged = false;
  double grad_norm = 0.0;   // sup-norm of the profiled objective gradient
  bool boundary_warning = false;  // D eigenvalue floored

  ModelFormula fixed_formula;
  ModelFormula random_formula;
  DesignBuilder fixed_builder{ModelFormula{}};
  DesignBuilder random_builder{ModelFormula{}};
};

// Maximizes the (restricted) profile likelihood over a log-Cholesky
// parameterization of the relative covariance factor; beta by GLS at the
// optimum, BLUPs by the conditional mean.
LmmFit fit_lmm(const ModelFormula& fixed, const ModelFormula& random, const Table& table,
               FitMethod method = FitMethod::REML);

struct InformationCriteria {
  double aic;
  double bic;
};
InformationCriteria information_criteria(const LmmFit& fit);

// Kass-Raftery evidence category for an absolute BIC difference; boundary
// values fall into the lower category.
std::string kass_raftery_category(double delta_bic);

struct SelectionRow {
  std::string name;
  int df;
  double bic;
  bool best = false;
};

std::vector<SelectionRow> selection_table(const std::vector<LmmFit>& fits,
                                          const std::vector<std::string>& names);

}  // namespace jointfit

#endif
