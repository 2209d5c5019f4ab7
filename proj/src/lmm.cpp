#include "jointfit/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "jointfit/errors.hpp"
#include "jointfit/optim.hpp"

namespace jointfit {

namespace {

struct SubjectBlock {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  Eigen::VectorXd y;
};

// Unpack the unconstrained parameter vector into the relative Cholesky
// factor Lambda (D = sigma2 * Lambda * Lambda'); diagonal entries are logged.
Eigen::MatrixXd unpack_lambda(const Eigen::VectorXd& theta, int q) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(q, q);
  int k = 0;
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j <= i; ++j) {
      L(i, j) = (i == j) ? std::exp(theta[k]) : theta[k];
      ++k;
    }
  }
  return L;
}

struct ProfiledFit {
  double deviance = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  double loglik = 0.0;
  Eigen::MatrixXd Ainv;  // (X' W^-1 X)^-1; vcov(beta) = sigma2 * Ainv
};

// Profiled (restricted) deviance: beta and sigma2 are solved in closed form
// given the relative covariance factor.
ProfiledFit profile_deviance(const std::vector<SubjectBlock>& blocks,
                             const Eigen::MatrixXd& Lambda, int n, int p,
                             FitMethod method) {
  const int q = static_cast<int>(Lambda.rows());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  double yWy = 0.0;
  double logdetW = 0.0;

  const Eigen::MatrixXd LLt = (q > 0) ? (Lambda * Lambda.transpose()).eval() : Eigen::MatrixXd();
  for (const auto& blk : blocks) {
    const Eigen::Index ni = blk.y.size();
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(ni, ni);
    if (q > 0) W.noalias() += blk.Z * LLt * blk.Z.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(W);
    if (llt.info() != Eigen::Success) {
      throw NumericError("marginal covariance not positive definite");
    }
    for (Eigen::Index i = 0; i < ni; ++i) {
      logdetW += 2.0 * std::log(llt.matrixL()(i, i));
    }
    const Eigen::VectorXd Wy = llt.solve(blk.y);
    yWy += blk.y.dot(Wy);
    if (p > 0) {
      A.noalias() += blk.X.transpose() * llt.solve(blk.X);
      c.noalias() += blk.X.transpose() * Wy;
    }
  }

  ProfiledFit out;
  double quad = yWy;
  double logdetA = 0.0;
  if (p > 0) {
    Eigen::LLT<Eigen::MatrixXd> lltA(A);
    if (lltA.info() != Eigen::Success) {
      throw NumericError("singular fixed-effects design");
    }
    out.beta = lltA.solve(c);
    out.Ainv = lltA.solve(Eigen::MatrixXd::Identity(p, p));
    quad -= out.beta.dot(c);
    for (int i = 0; i < p; ++i) logdetA += 2.0 * std::log(lltA.matrixL()(i, i));
  } else {
    out.beta.resize(0);
    out.Ainv.resize(0, 0);
  }
  quad = std::max(quad, 1e-300);

  const double denom = (method == FitMethod::ML) ? n : (n - p);
  out.sigma2 = quad / denom;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  if (method == FitMethod::ML) {
    out.deviance = n * (log2pi + std::log(out.sigma2)) + logdetW + denom;
  } else {
    out.deviance = denom * (log2pi + std::log(out.sigma2)) + logdetW + logdetA + denom;
  }
  out.loglik = -0.5 * out.deviance;
  return out;
}

}  // namespace

LmmFit fit_lmm(const ModelFormula& fixed, const ModelFormula& random, const Table& table,
               FitMethod method) {
  LmmFit fit;
  fit.method = method;
  fit.fixed_formula = fixed;
  fit.random_formula = random;
  fit.fixed_builder = DesignBuilder(fixed);
  fit.random_builder = DesignBuilder(random);

  const DesignMatrix Xall = fit.fixed_builder.build(table);
  const DesignMatrix Zall = fit.random_builder.build(table);
  fit.fixed_labels = Xall.labels;
  fit.random_labels = Zall.labels;

  const int n = static_cast<int>(table.nrows());
  const int p = static_cast<int>(Xall.cols());
  const int q = static_cast<int>(Zall.cols());
  if (n == 0) throw ValidationError("no observations");
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xall.values);
    if (qr.rank() < p) throw NumericError("singular fixed-effects design (rank deficient)");
  }

  // Group rows by subject id, subjects in sorted-id order.
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < table.nrows(); ++i) groups[table.ids[i]].push_back(i);

  std::vector<SubjectBlock> blocks;
  blocks.reserve(groups.size());
  for (const auto& [id, rows] : groups) {
    fit.subject_ids.push_back(id);
    SubjectBlock blk;
    const Eigen::Index ni = static_cast<Eigen::Index>(rows.size());
    blk.X.resize(ni, p);
    blk.Z.resize(ni, q);
    blk.y.resize(ni);
    for (Eigen::Index r = 0; r < ni; ++r) {
      blk.X.row(r) = Xall.values.row(rows[r]);
      blk.Z.row(r) = Zall.values.row(rows[r]);
      blk.y[r] = table.col(fixed.response)[rows[r]];
    }
    blocks.push_back(std::move(blk));
  }
  fit.n_obs = n;
  fit.n_subjects = static_cast<int>(blocks.size());

  const int n_theta = q * (q + 1) / 2;
  auto objective = [&](const Eigen::VectorXd& theta) -> double {
    // Out-of-range steps (overflowing Lambda) read as +inf so the line
    // search backtracks instead of aborting.
    try {
      const Eigen::MatrixXd Lambda = unpack_lambda(theta, q);
      if (!Lambda.allFinite()) return std::numeric_limits<double>::infinity();
      const double dev = profile_deviance(blocks, Lambda, n, p, method).deviance;
      return std::isfinite(dev) ? dev : std::numeric_limits<double>::infinity();
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  OptimOptions opts;
  opts.max_iterations = 500;
  opts.rel_tol = 1e-8;
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(n_theta);
  OptimResult opt = minimize_bfgs(objective, theta0, opts);
  if (!opt.converged) {
    throw NumericError("mixed-model optimizer did not converge after " +
                       std::to_string(opt.iterations) + " iterations (gradient " +
                       std::to_string(opt.gradient.size() ? opt.gradient.lpNorm<Eigen::Infinity>() : 0.0) +
                       ")");
  }
  fit.converged = true;
  fit.grad_norm = opt.gradient.size() ? opt.gradient.lpNorm<Eigen::Infinity>() : 0.0;

  const Eigen::MatrixXd Lambda = unpack_lambda(opt.x, q);
  const ProfiledFit prof = profile_deviance(blocks, Lambda, n, p, method);
  fit.beta = prof.beta;
  fit.sigma2 = prof.sigma2;
  fit.loglik = prof.loglik;
  fit.vcov_beta = prof.sigma2 * prof.Ainv;

  fit.D = fit.sigma2 * (Lambda * Lambda.transpose());
  if (q > 0) {
    // Floor near-zero variance directions so downstream Cholesky succeeds.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.D);
    if (es.eigenvalues().minCoeff() < 1e-10) {
      fit.boundary_warning = true;
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-10);
      fit.D = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    }
  }

  // BLUPs: b_i = Lambda Lambda' Z_i' W_i^{-1} (y_i - X_i beta).
  fit.blups.resize(fit.n_subjects, q);
  if (q > 0) {
    const Eigen::MatrixXd LLt = Lambda * Lambda.transpose();
    for (int s = 0; s < fit.n_subjects; ++s) {
      const auto& blk = blocks[s];
      const Eigen::Index ni = blk.y.size();
      Eigen::MatrixXd W = Eigen::MatrixXd::Identity(ni, ni);
      W.noalias() += blk.Z * LLt * blk.Z.transpose();
      Eigen::VectorXd resid = blk.y;
      if (p > 0) resid -= blk.X * fit.beta;
      fit.blups.row(s) = (LLt * blk.Z.transpose() * W.llt().solve(resid)).transpose();
    }
  }

  fit.df = p + q * (q + 1) / 2 + 1;
  return fit;
}

InformationCriteria information_criteria(const LmmFit& fit) {
  const double m2ll = -2.0 * fit.loglik;
  return {m2ll + 2.0 * fit.df, m2ll + fit.df * std::log(static_cast<double>(fit.n_obs))};
}

std::string kass_raftery_category(double delta_bic) {
  if (delta_bic < 0.0) throw ValidationError("BIC difference must be non-negative");
  if (delta_bic <= 2.0) return "not worth mentioning";
  if (delta_bic <= 6.0) return "positive";
  if (delta_bic <= 10.0) return "strong";
  return "very strong";
}

std::vector<SelectionRow> selection_table(const std::vector<LmmFit>& fits,
                                          const std::vector<std::string>& names) {
  if (fits.size() != names.size()) throw ValidationError("fits/names size mismatch");
  if (fits.empty()) throw ValidationError("no fits to compare");
  const bool any_reml = std::any_of(fits.begin(), fits.end(), [](const LmmFit& f) {
    return f.method == FitMethod::REML;
  });
  const bool same_fixed = std::all_of(fits.begin(), fits.end(), [&](const LmmFit& f) {
    return f.fixed_formula == fits.front().fixed_formula;
  });
  if (any_reml && !same_fixed) {
    throw ValidationError(
        "BIC comparison across different fixed effects requires ML fits; re-fit with ML");
  }
  std::vector<SelectionRow> rows;
  std::size_t best = 0;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    rows.push_back({names[i], fits[i].df, information_criteria(fits[i]).bic, false});
    if (rows[i].bic < rows[best].bic) best = i;
  }
  rows[best].best = true;
  return rows;
}

}  // namespace jointfit
