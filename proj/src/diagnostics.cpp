#include "jointfit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "jointfit/errors.hpp"
#include "jointfit/spline.hpp"

namespace jointfit {

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& x, int max_lag) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ValidationError("autocorrelation needs at least 2 values");
  max_lag = std::min(max_lag, n - 1);
  const double mean = x.mean();
  const Eigen::VectorXd c = x.array() - mean;
  const double c0 = c.squaredNorm() / n;
  Eigen::VectorXd acf(max_lag + 1);
  if (c0 <= 0.0) {
    acf.setZero();
    acf[0] = 1.0;
    return acf;
  }
  for (int k = 0; k <= max_lag; ++k) {
    acf[k] = c.head(n - k).dot(c.tail(n - k)) / (n * c0);
  }
  return acf;
}

double effective_sample_size(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  if (n < 4) return static_cast<double>(n);
  const Eigen::VectorXd acf = autocorrelation(x, n - 1);
  // Sum adjacent-lag pairs while they stay positive (Geyer).
  double tau = 1.0;
  for (int k = 1; k + 1 < static_cast<int>(acf.size()); k += 2) {
    const double pair = acf[k] + acf[k + 1];
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::clamp(n / tau, 1.0, static_cast<double>(n));
}

Kde kernel_density(const Eigen::VectorXd& x, int n_grid) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ValidationError("density estimate needs at least 2 values");
  if (n_grid < 2) throw ValidationError("density grid needs at least 2 points");

  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (n - 1));
  Eigen::VectorXd sorted = x;
  std::sort(sorted.data(), sorted.data() + n);
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.349);
  if (spread <= 0.0) spread = std::max(sd, 1e-12);
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  Kde out;
  out.bandwidth = h;
  const double lo = sorted[0] - 3.0 * h;
  const double hi = sorted[n - 1] + 3.0 * h;
  out.grid.resize(n_grid);
  out.density.resize(n_grid);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (int g = 0; g < n_grid; ++g) {
    const double t = lo + (hi - lo) * g / (n_grid - 1);
    out.grid[g] = t;
    out.density[g] = norm * ((x.array() - t) / h).square().unaryExpr([](double u) {
                              return std::exp(-0.5 * u);
                            }).sum();
  }
  return out;
}

std::vector<ChainDiagnostics> chain_diagnostics(const PosteriorChains& chains) {
  std::vector<ChainDiagnostics> rows;
  const int n = chains.n_draws();
  if (n == 0) throw ValidationError("empty chains");
  for (int j = 0; j < chains.draws.cols(); ++j) {
    const Eigen::VectorXd col = chains.draws.col(j);
    const double mean = col.mean();
    const double sd = (n > 1) ? std::sqrt((col.array() - mean).square().sum() / (n - 1)) : 0.0;
    rows.push_back({chains.labels[j], mean, sd, effective_sample_size(col)});
  }
  return rows;
}

FitQuality dic_lpml(const JointModel& model, const PosteriorChains& chains) {
  const int M = chains.n_draws();
  if (M == 0) throw ValidationError("empty chains");
  if (model.n_random_effects() > 0 &&
      static_cast<int>(chains.b_draws.size()) != M) {
    throw ValidationError("DIC/LPML require chains stored with random effects");
  }

  const int N = model.n_subjects();
  Eigen::MatrixXd ll(M, N);  // per-draw, per-subject log-likelihood
  Eigen::MatrixXd draw_mean = Eigen::MatrixXd::Zero(1, chains.draws.cols());
  Eigen::MatrixXd b_mean;
  for (int m = 0; m < M; ++m) {
    const JointParameters p = chains.unpack(m);
    ll.row(m) = model.subject_loglik(p).transpose();
    if (m == 0) {
      b_mean = p.b;
    } else {
      b_mean += p.b;
    }
  }

  FitQuality out;
  out.dbar = -2.0 * ll.sum() / M;

  // Deviance at the posterior mean of all parameters, random effects included.
  JointParameters pbar = chains.unpack(0);
  const Eigen::RowVectorXd mean_row = chains.draws.colwise().mean();
  {
    PosteriorChains one = chains;
    one.draws = mean_row;
    one.b_draws.clear();
    JointParameters tmp = one.unpack(0);
    tmp.b = b_mean / M;
    pbar = tmp;
  }
  out.dhat = -2.0 * model.subject_loglik(pbar).sum();
  out.pd = out.dbar - out.dhat;
  out.dic = out.dbar + out.pd;

  // CPO_i = harmonic mean of the per-draw likelihoods, via log-sum-exp.
  out.cpo.resize(N);
  out.lpml = 0.0;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd neg = -ll.col(i);
    const double mx = neg.maxCoeff();
    const double lse = mx + std::log((neg.array() - mx).exp().sum());
    const double log_cpo = std::log(static_cast<double>(M)) - lse;
    out.cpo[i] = std::exp(log_cpo);
    out.lpml += log_cpo;
  }
  return out;
}

std::vector<ComparisonRow> compare_models(const std::vector<FitQuality>& fits,
                                          const std::vector<std::string>& names) {
  if (fits.size() != names.size()) throw ValidationError("fits/names size mismatch");
  if (fits.empty()) throw ValidationError("no fits to compare");
  std::size_t best_dic = 0, best_lpml = 0;
  for (std::size_t i = 1; i < fits.size(); ++i) {
    if (fits[i].dic < fits[best_dic].dic) best_dic = i;
    if (fits[i].lpml > fits[best_lpml].lpml) best_lpml = i;
  }
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    rows.push_back({names[i], fits[i].dic, fits[i].pd, fits[i].lpml, i == best_dic,
                    i == best_lpml});
  }
  return rows;
}

}  // namespace jointfit
