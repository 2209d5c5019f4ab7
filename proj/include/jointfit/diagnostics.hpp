#ifndef JOINTFIT_DIAGNOSTICS_HPP
#define JOINTFIT_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "jointfit/jointmodel.hpp"

namespace jointfit {

// Sample autocorrelations at lags 0..max_lag (biased estimator, lag-0 = 1).
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& x, int max_lag);

// Effective sample size with Geyer's initial-positive-sequence truncation:
// lags are summed in adjacent pairs until a pair sum goes non-positive.
double effective_sample_size(const Eigen::VectorXd& x);

struct Kde {
  Eigen::VectorXd grid;     // evaluation points
  Eigen::VectorXd density;  // Gaussian-kernel estimate
  double bandwidth = 0.0;   // Silverman's rule
};

Kde kernel_density(const Eigen::VectorXd& x, int n_grid = 512);

// Per-chain summaries used by the diagnostics report.
struct ChainDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
};

std::vector<ChainDiagnostics> chain_diagnostics(const PosteriorChains& chains);

// Deviance-based fit measures, conditional on the sampled random effects.
struct FitQuality {
  double dbar = 0.0;  // posterior mean deviance
  double dhat = 0.0;  // deviance at the posterior mean
  double pd = 0.0;    // effective parameters, dbar - dhat
  double dic = 0.0;   // dbar + pd
  double lpml = 0.0;  // sum of log conditional predictive ordinates
  Eigen::VectorXd cpo;
};

// Requires chains recorded with store_random_effects.
FitQuality dic_lpml(const JointModel& model, const PosteriorChains& chains);

struct ComparisonRow {
  std::string name;
  double dic;
  double pd;
  double lpml;
  bool best_dic = false;   // smallest DIC
  bool best_lpml = false;  // largest LPML
};

std::vector<ComparisonRow> compare_models(const std::vector<FitQuality>& fits,
                                          const std::vector<std::string>& names);

}  // namespace jointfit

#endif
