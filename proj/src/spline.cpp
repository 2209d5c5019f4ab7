#include "jointfit/spline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "jointfit/errors.hpp"

namespace jointfit {

double quantile(const Eigen::VectorXd& x, double p) {
  std::vector<double> s(x.data(), x.data() + x.size());
  std::sort(s.begin(), s.end());
  if (s.empty()) throw ValidationError("quantile of empty vector");
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + (h - std::floor(h)) * (s[lo + 1] - s[lo]);
}

namespace {

// (u)_+^k and derivatives for the truncated-power pieces.
double trunc_pow3(double u, int deriv) {
  if (u <= 0.0) return 0.0;
  switch (deriv) {
    case 0:
      return u * u * u;
    case 1:
      return 3.0 * u * u;
    default:
      return 6.0 * u;
  }
}

}  // namespace

NaturalSplineBasis::NaturalSplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw ValidationError("natural spline needs at least 2 knots");
  if (!std::is_sorted(knots_.begin(), knots_.end())) {
    throw ValidationError("spline knots must be sorted");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i] == knots_[i - 1]) throw ValidationError("duplicate spline knot");
  }
}

NaturalSplineBasis NaturalSplineBasis::from_data(
    const Eigen::VectorXd& x, int df, std::optional<std::pair<double, double>> boundary) {
  if (df < 1) throw ValidationError("spline df must be >= 1");
  std::set<double> distinct(x.data(), x.data() + x.size());
  if (static_cast<int>(distinct.size()) < df + 1) {
    throw ValidationError("spline df=" + std::to_string(df) + " exceeds " +
                          std::to_string(distinct.size()) + " distinct values");
  }
  double lo, hi;
  if (boundary) {
    lo = boundary->first;
    hi = boundary->second;
  } else {
    lo = x.minCoeff();
    hi = x.maxCoeff();
  }
  if (!(lo < hi)) throw ValidationError("degenerate spline boundary");
  std::vector<double> knots{lo};
  for (int i = 1; i < df; ++i) {
    const double q = quantile(x, static_cast<double>(i) / df);
    if (q <= knots.back() || q >= hi) {
      throw ValidationError("interior spline knot falls outside the boundary interval");
    }
    knots.push_back(q);
  }
  knots.push_back(hi);
  return NaturalSplineBasis(std::move(knots));
}

Eigen::RowVectorXd NaturalSplineBasis::evaluate_one(double x, int deriv) const {
  const int K = static_cast<int>(knots_.size());
  const double hi = knots_.back();
  Eigen::RowVectorXd row(df());
  // First column: the linear piece.
  row[0] = (deriv == 0) ? x : (deriv == 1 ? 1.0 : 0.0);
  // d_k(x) = [(x - k_k)_+^3 - (x - k_K)_+^3] / (k_K - k_k)
  auto d = [&](int k) {
    return (trunc_pow3(x - knots_[k], deriv) - trunc_pow3(x - hi, deriv)) /
           (hi - knots_[k]);
  };
  const double d_last = (K >= 3) ? d(K - 2) : 0.0;
  for (int k = 1; k <= K - 2; ++k) row[k] = d(k - 1) - d_last;
  return row;
}

Eigen::MatrixXd NaturalSplineBasis::evaluate(const Eigen::VectorXd& x, int deriv) const {
  Eigen::MatrixXd out(x.size(), df());
  for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = evaluate_one(x[i], deriv);
  return out;
}

BSplineBasis::BSplineBasis(double lo, double hi, std::vector<double> interior, int degree)
    : lo_(lo), hi_(hi), degree_(degree), interior_(std::move(interior)) {
  if (!(lo < hi)) throw ValidationError("degenerate B-spline interval");
  if (!std::is_sorted(interior_.begin(), interior_.end())) {
    throw ValidationError("B-spline interior knots must be sorted");
  }
  n_basis_ = static_cast<int>(interior_.size()) + degree_ + 1;
  knots_.assign(degree_ + 1, lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), degree_ + 1, hi_);
}

BSplineBasis BSplineBasis::for_baseline(const Eigen::VectorXd& event_times, int n_basis,
                                        double lo, double hi) {
  const int n_interior = n_basis - 4;
  if (n_interior < 0) throw ValidationError("baseline spline needs at least 4 basis functions");
  std::vector<double> interior;
  for (int i = 1; i <= n_interior; ++i) {
    double q = quantile(event_times, static_cast<double>(i) / (n_interior + 1));
    q = std::clamp(q, lo, hi);
    interior.push_back(q);
  }
  // Coincident quantiles (heavy ties) are nudged apart to keep the basis valid.
  for (std::size_t i = 1; i < interior.size(); ++i) {
    if (interior[i] <= interior[i - 1]) {
      interior[i] = interior[i - 1] + 1e-8 * (hi - lo);
    }
  }
  while (!interior.empty() && interior.back() >= hi) interior.pop_back();
  if (static_cast<int>(interior.size()) != n_interior) {
    // Fall back to an equally spaced grid when quantiles collapse.
    interior.clear();
    for (int i = 1; i <= n_interior; ++i) {
      interior.push_back(lo + (hi - lo) * static_cast<double>(i) / (n_interior + 1));
    }
  }
  return BSplineBasis(lo, hi, std::move(interior), 3);
}

Eigen::RowVectorXd BSplineBasis::evaluate_one(double x) const {
  x = std::clamp(x, lo_, hi_);
  const int p = degree_;
  const int n = n_basis_;
  // Find the knot span [knots_[span], knots_[span+1]) containing x.
  int span = p;
  {
    const int hi_span = n - 1;
    if (x >= knots_[n]) {
      span = hi_span;
    } else {
      while (span < hi_span && x >= knots_[span + 1]) ++span;
    }
  }
  // Cox-de Boor: the p+1 non-vanishing basis functions on this span.
  std::vector<double> N(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  N[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = (denom != 0.0) ? N[r] / denom : 0.0;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  for (int j = 0; j <= p; ++j) {
    const int idx = span - p + j;
    if (idx >= 0 && idx < n) row[idx] = N[j];
  }
  return row;
}

Eigen::MatrixXd BSplineBasis::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out(x.size(), n_basis_);
  for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = evaluate_one(x[i]);
  return out;
}

}  // namespace jointfit
