#ifndef JOINTFIT_SPLINE_HPP
#define JOINTFIT_SPLINE_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

namespace jointfit {

// Type-7 sample quantile (linear interpolation between order statistics).
double quantile(const Eigen::VectorXd& x, double p);

// Natural cubic spline basis: cubic between knots, linear beyond the
// boundary knots, continuous first and second derivatives everywhere.
// A basis with df columns uses df+1 knots (2 boundary + df-1 interior).
class NaturalSplineBasis {
 public:
  // knots must be sorted; first and last are the boundary knots.
  explicit NaturalSplineBasis(std::vector<double> knots);

  // Interior knots at equally spaced quantiles of x, boundary at min/max
  // unless an explicit boundary pair is given.
  static NaturalSplineBasis from_data(const Eigen::VectorXd& x, int df,
                                      std::optional<std::pair<double, double>> boundary = {});

  int df() const { return static_cast<int>(knots_.size()) - 1; }
  const std::vector<double>& knots() const { return knots_; }
  std::pair<double, double> boundary() const { return {knots_.front(), knots_.back()}; }

  // Rows = x, columns = df basis functions. deriv in {0, 1, 2}.
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x, int deriv = 0) const;
  Eigen::RowVectorXd evaluate_one(double x, int deriv = 0) const;

 private:
  std::vector<double> knots_;
};

// Cubic B-spline basis on [lo, hi] with clamped boundary knots, used for the
// penalized log-baseline-hazard.
class BSplineBasis {
 public:
  BSplineBasis(double lo, double hi, std::vector<double> interior_knots, int degree = 3);

  // n_basis cubic B-splines with interior knots at equally spaced quantiles
  // of the observed event times.
  static BSplineBasis for_baseline(const Eigen::VectorXd& event_times, int n_basis,
                                   double lo, double hi);

  int size() const { return n_basis_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& interior_knots() const { return interior_; }

  Eigen::RowVectorXd evaluate_one(double x) const;
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

 private:
  double lo_, hi_;
  int degree_;
  int n_basis_;
  std::vector<double> interior_;
  std::vector<double> knots_;  // full clamped knot vector
};

}  // namespace jointfit

#endif
