#ifndef JOINTFIT_OPTIM_HPP
#define JOINTFIT_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

namespace jointfit {

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

struct OptimOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;     // relative change of the objective
  double grad_tol = 1e-6;    // sup-norm of the numerical gradient
  double fd_step = 1e-6;     // central-difference step scale
};

// Central-difference gradient of fn at x.
Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double step = 1e-6);

// Quasi-Newton (BFGS) minimizer with backtracking line search and numerical
// gradients. Suited to the low-dimensional smooth objectives used here.
OptimResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& fn,
                          Eigen::VectorXd x0, const OptimOptions& opts = {});

}  // namespace jointfit

#endif
