#include "jointfit/optim.hpp"

#include <cmath>

namespace jointfit {

Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = fn(xp);
    xp[i] = x[i] - h;
    const double fm = fn(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& fn,
                          Eigen::VectorXd x0, const OptimOptions& opts) {
  OptimResult res;
  const Eigen::Index n = x0.size();
  res.x = std::move(x0);
  res.value = fn(res.x);
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Eigen::VectorXd g = numerical_gradient(fn, res.x, opts.fd_step);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);  // inverse-Hessian estimate

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -(H * g);
    if (dir.dot(g) >= 0.0) {
      H.setIdentity();
      dir = -g;
    }
    // Backtracking Armijo line search.
    double step = 1.0;
    const double slope = dir.dot(g);
    double f_new = res.value;
    Eigen::VectorXd x_new = res.x;
    bool advanced = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = res.x + step * dir;
      f_new = fn(x_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        advanced = true;
        break;
      }
      step *= 0.5;
    }
    if (!advanced) {
      // No progress possible along this direction; accept as converged if
      // the gradient is already small, otherwise report the best iterate.
      res.converged = g.lpNorm<Eigen::Infinity>() < 1e-3;
      break;
    }
    Eigen::VectorXd g_new = numerical_gradient(fn, x_new, opts.fd_step);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const Eigen::VectorXd Hy = H * yv;
      const double yHy = yv.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose());
      H -= (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    const double rel_change = std::abs(res.value - f_new) / (std::abs(res.value) + 1e-12);
    res.x = std::move(x_new);
    res.value = f_new;
    g = std::move(g_new);
    if (rel_change < opts.rel_tol && g.lpNorm<Eigen::Infinity>() < 1e-4) {
      res.converged = true;
      break;
    }
  }
  res.gradient = g;
  return res;
}

}  // namespace jointfit
