#ifndef JOINTFIT_SURVIVAL_HPP
#define JOINTFIT_SURVIVAL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "jointfit/data.hpp"
#include "jointfit/design.hpp"
#include "jointfit/formula.hpp"

namespace jointfit {

struct KmCurve {
  std::string label;                // group value, empty when ungrouped
  std::vector<double> times;        // sorted distinct event times
  std::vector<double> survival;     // product-limit estimate at each time
  std::vector<int> at_risk;
  std::vector<int> events;
};

// Product-limit estimator; ties are handled events-before-censoring.
std::vector<KmCurve> kaplan_meier(const std::vector<SurvivalRecord>& records,
                                  const std::optional<std::string>& group_by = {});

struct BreslowStep {
  double time;
  double increment;   // hazard mass at this event time
  double cumhaz;
};

struct CoxFit {
  Eigen::VectorXd gamma;
  Eigen::VectorXd se;
  double partial_loglik = 0.0;
  Eigen::VectorXd score;            // at the optimum
  Eigen::MatrixXd information;      // observed information at the optimum
  Eigen::MatrixXd vcov;             // inverse information
  std::vector<std::string> labels;

  // Breslow baseline cumulative hazard, one step sequence per stratum.
  std::vector<std::string> strata_labels;
  std::vector<std::vector<BreslowStep>> baseline;

  // Design snapshot aligned with subject order (sorted by id).
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd design;
  Eigen::VectorXd event_times;
  std::vector<bool> events;
  int n_events = 0;
  int iterations = 0;

  double cumulative_baseline(double t, std::size_t stratum = 0) const;
};

// Newton-Raphson on the Breslow-ties partial likelihood. The intercept is
// always dropped from the covariate formula. An optional strata covariate
// gives each stratum its own baseline hazard.
CoxFit fit_cox(const std::vector<SurvivalRecord>& records, const ModelFormula& covariates,
               const std::optional<std::string>& strata = {});

enum class TimeTransform { Identity, Rank, Km };

struct SchoenfeldTest {
  struct Row {
    std::string label;
    double rho;     // NaN for the global row
    double chisq;
    double p;
  };
  std::vector<Row> per_covariate;
  Row global;
};

// Grambsch-Therneau proportional-hazards test on scaled Schoenfeld residuals.
SchoenfeldTest schoenfeld_test(const CoxFit& fit,
                               TimeTransform transform = TimeTransform::Identity);

inline double hazard_ratio(double coef) { return std::exp(coef); }

// Percent change in risk for a `delta`-unit change; positive values are risk
// reductions for negative coefficients.
inline double percent_risk_change(double coef, double delta = 1.0) {
  return (1.0 - std::exp(coef * delta)) * 100.0;
}

// Table-style p-value formatting: 3 significant digits, "<0.001" below 1e-3.
std::string format_p_value(double p);

}  // namespace jointfit

#endif
