#ifndef JOINTFIT_SIMULATE_HPP
#define JOINTFIT_SIMULATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "jointfit/data.hpp"
#include "jointfit/jointmodel.hpp"

namespace jointfit {

// Subject-level covariate distribution for the generator.
struct CovariateSpec {
  enum class Kind { Bernoulli, Normal, Uniform };
  std::string name;
  Kind kind = Kind::Bernoulli;
  double a = 0.5;  // p (Bernoulli), mean (Normal), lo (Uniform)
  double b = 1.0;  // unused / sd / hi
};

struct BaselineHazardSpec {
  enum class Kind { Constant, Weibull, LogSpline };
  Kind kind = Kind::Constant;
  double rate = 0.1;                // Constant: h0(t) = rate
  double shape = 1.0;               // Weibull: h0(t) = shape/scale (t/scale)^(shape-1)
  double scale = 1.0;
  std::vector<double> coefs;        // LogSpline: log h0 = B(t) coefs on [0, censor]
};

// Ground-truth generative model for joint data.
struct Generator {
  int n_subjects = 300;
  std::uint64_t seed = 1;

  std::vector<double> visit_times;  // scheduled grid, strictly increasing
  double visit_jitter = 0.1;        // uniform +- fraction of local grid spacing
  double censor_time = 0.0;         // administrative censoring

  std::vector<CovariateSpec> covariates;

  std::string fixed;        // e.g. "y ~ time + group"
  std::string random;       // e.g. "~ time | id"
  std::vector<std::string> survival_covariates;  // names entering gamma
  std::string time_var = "time";

  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::MatrixXd D;
  Eigen::VectorXd gamma;
  Eigen::VectorXd alpha;
  AssociationStructure association;
  BaselineHazardSpec baseline;
};

Generator generator_from_json(const std::string& json_text);
std::string generator_to_json(const Generator& gen);

// Latent values behind a simulated dataset.
struct SimulationTruth {
  Eigen::MatrixXd b;                  // n_subjects x q
  Eigen::VectorXd true_event_time;    // +inf when the event never happens
  std::vector<bool> observed_event;   // true event before censoring
};

struct SimulationResult {
  JointDataset data;
  SimulationTruth truth;
};

SimulationResult simulate_joint(const Generator& gen);

}  // namespace jointfit

#endif
