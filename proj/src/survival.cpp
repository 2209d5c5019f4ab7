#include "jointfit/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "jointfit/errors.hpp"
#include "jointfit/stats.hpp"

namespace jointfit {

std::vector<KmCurve> kaplan_meier(const std::vector<SurvivalRecord>& records,
                                  const std::optional<std::string>& group_by) {
  if (records.empty()) throw ValidationError("no survival records");

  std::map<std::string, std::vector<const SurvivalRecord*>> groups;
  if (group_by) {
    for (const auto& r : records) {
      auto it = r.baseline_covariates.find(*group_by);
      if (it == r.baseline_covariates.end()) {
        throw ValidationError("grouping covariate '" + *group_by + "' missing for subject '" +
                              r.subject_id + "'");
      }
      groups[*group_by + "=" + format_double(it->second)].push_back(&r);
    }
  } else {
    for (const auto& r : records) groups[""].push_back(&r);
  }

  std::vector<KmCurve> curves;
  for (auto& [label, recs] : groups) {
    if (recs.empty()) throw ValidationError("empty group in Kaplan-Meier");
    std::vector<std::pair<double, bool>> obs;  // (time, event)
    for (const auto* r : recs) {
      if (r->event_time < 0.0) throw ValidationError("negative event time");
      obs.emplace_back(r->event_time, r->event);
    }
    std::sort(obs.begin(), obs.end());

    KmCurve curve;
    curve.label = label;
    double s = 1.0;
    std::size_t i = 0;
    const std::size_t n = obs.size();
    while (i < n) {
      const double t = obs[i].first;
      int d = 0, removed = 0;
      std::size_t j = i;
      while (j < n && obs[j].first == t) {
        if (obs[j].second) ++d;
        ++removed;
        ++j;
      }
      const int at_risk = static_cast<int>(n - i);
      if (d > 0) {
        s *= 1.0 - static_cast<double>(d) / at_risk;
        curve.times.push_back(t);
        curve.survival.push_back(s);
        curve.at_risk.push_back(at_risk);
        curve.events.push_back(d);
      }
      i = j;
      (void)removed;
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

namespace {

struct CoxData {
  Eigen::MatrixXd W;               // n x p covariates
  Eigen::VectorXd time;
  std::vector<bool> event;
  std::vector<int> stratum;        // stratum index per subject
  int n_strata = 1;
};

// Breslow partial log-likelihood with score and information, accumulated by
// sweeping each stratum from the largest time down.
void breslow_loglik(const CoxData& d, const Eigen::VectorXd& gamma, double& ll,
                    Eigen::VectorXd& U, Eigen::MatrixXd& I) {
  const int p = static_cast<int>(gamma.size());
  const Eigen::Index n = d.time.size();
  ll = 0.0;
  U = Eigen::VectorXd::Zero(p);
  I = Eigen::MatrixXd::Zero(p, p);
  const Eigen::VectorXd lp = d.W * gamma;

  for (int st = 0; st < d.n_strata; ++st) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d.stratum[i] == st) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(),
              [&](Eigen::Index a, Eigen::Index b) { return d.time[a] > d.time[b]; });

    double S0 = 0.0;
    Eigen::VectorXd S1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(p, p);
    std::size_t k = 0;
    while (k < idx.size()) {
      const double t = d.time[idx[k]];
      // Everyone with time >= t enters the risk set.
      while (k < idx.size() && d.time[idx[k]] == t) {
        const Eigen::Index i = idx[k];
        const double e = std::exp(lp[i]);
        S0 += e;
        S1.noalias() += e * d.W.row(i).transpose();
        S2.noalias() += e * d.W.row(i).transpose() * d.W.row(i);
        ++k;
      }
      // Breslow contribution of the deaths at t.
      int deaths = 0;
      Eigen::VectorXd sw = Eigen::VectorXd::Zero(p);
      double slp = 0.0;
      for (std::size_t j = k; j-- > 0;) {
        const Eigen::Index i = idx[j];
        if (d.time[i] != t) break;
        if (d.event[i]) {
          ++deaths;
          sw += d.W.row(i).transpose();
          slp += lp[i];
        }
      }
      if (deaths > 0) {
        ll += slp - deaths * std::log(S0);
        const Eigen::VectorXd wbar = S1 / S0;
        U.noalias() += sw - deaths * wbar;
        I.noalias() += deaths * (S2 / S0 - wbar * wbar.transpose());
      }
    }
  }
}

}  // namespace

double CoxFit::cumulative_baseline(double t, std::size_t stratum) const {
  const auto& steps = baseline.at(stratum);
  double h = 0.0;
  for (const auto& s : steps) {
    if (s.time > t) break;
    h = s.cumhaz;
  }
  return h;
}

CoxFit fit_cox(const std::vector<SurvivalRecord>& records, const ModelFormula& covariates,
               const std::optional<std::string>& strata) {
  if (records.empty()) throw ValidationError("no survival records");

  std::vector<SurvivalRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });

  // Build the covariate design; the Cox model has no intercept.
  ModelFormula f = covariates;
  f.intercept = false;
  if (f.terms.empty()) throw ValidationError("Cox model needs at least one covariate");

  Table t;
  {
    const Eigen::Index n = static_cast<Eigen::Index>(sorted.size());
    for (Eigen::Index i = 0; i < n; ++i) t.ids.push_back(sorted[i].subject_id);
    if (!sorted.empty()) {
      for (const auto& [name, _] : sorted.front().baseline_covariates) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          auto it = sorted[i].baseline_covariates.find(name);
          if (it == sorted[i].baseline_covariates.end()) {
            throw ValidationError("covariate '" + name + "' missing for subject '" +
                                  sorted[i].subject_id + "'");
          }
          v[i] = it->second;
        }
        t.add(name, std::move(v));
      }
    }
  }
  DesignBuilder builder(f);
  const DesignMatrix design = builder.build(t);
  const int p = static_cast<int>(design.cols());

  CoxData data;
  data.W = design.values;
  data.time.resize(static_cast<Eigen::Index>(sorted.size()));
  data.event.resize(sorted.size());
  data.stratum.assign(sorted.size(), 0);
  int n_events = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    data.time[static_cast<Eigen::Index>(i)] = sorted[i].event_time;
    data.event[i] = sorted[i].event;
    if (sorted[i].event) ++n_events;
  }
  if (n_events == 0) throw ValidationError("no events observed; Cox model cannot be fitted");

  std::vector<std::string> strata_labels{""};
  if (strata) {
    std::map<double, int> levels;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double v = sorted[i].baseline_covariates.at(*strata);
      auto [it, inserted] = levels.emplace(v, static_cast<int>(levels.size()));
      data.stratum[i] = it->second;
    }
    data.n_strata = static_cast<int>(levels.size());
    strata_labels.clear();
    for (const auto& [v, idx] : levels) {
      strata_labels.push_back(*strata + "=" + format_double(v));
    }
  }

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(p);
  double ll = 0.0;
  Eigen::VectorXd U;
  Eigen::MatrixXd I;
  breslow_loglik(data, gamma, ll, U, I);
  int iter = 0;
  for (; iter < 50; ++iter) {
    if (U.lpNorm<Eigen::Infinity>() < 1e-9) break;
    Eigen::LLT<Eigen::MatrixXd> llt(I);
    if (llt.info() != Eigen::Success) {
      throw NumericError("Cox information matrix is singular; design not full rank on risk sets");
    }
    const Eigen::VectorXd step = llt.solve(U);
    double scale = 1.0;
    Eigen::VectorXd gamma_new;
    double ll_new;
    Eigen::VectorXd U_new;
    Eigen::MatrixXd I_new;
    for (int h = 0; h < 30; ++h) {
      gamma_new = gamma + scale * step;
      breslow_loglik(data, gamma_new, ll_new, U_new, I_new);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12) break;
      scale *= 0.5;
    }
    gamma = gamma_new;
    ll = ll_new;
    U = U_new;
    I = I_new;
    if (gamma.lpNorm<Eigen::Infinity>() > 15.0) {
      throw NumericError(
          "Cox coefficient diverged (monotone likelihood: a covariate separates events)");
    }
  }
  if (U.lpNorm<Eigen::Infinity>() >= 1e-9) {
    throw NumericError("Cox Newton-Raphson did not converge");
  }

  CoxFit fit;
  fit.gamma = gamma;
  fit.partial_loglik = ll;
  fit.score = U;
  fit.information = I;
  Eigen::LLT<Eigen::MatrixXd> llt(I);
  if (llt.info() != Eigen::Success) {
    throw NumericError("information matrix not positive definite at the optimum");
  }
  fit.vcov = llt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.se = fit.vcov.diagonal().cwiseSqrt();
  fit.labels = design.labels;
  fit.strata_labels = strata_labels;
  fit.n_events = n_events;
  fit.iterations = iter;
  for (const auto& r : sorted) fit.subject_ids.push_back(r.subject_id);
  fit.design = design.values;
  fit.event_times = data.time;
  fit.events = data.event;

  // Breslow baseline cumulative hazard per stratum.
  const Eigen::VectorXd lp = data.W * gamma;
  fit.baseline.resize(data.n_strata);
  for (int st = 0; st < data.n_strata; ++st) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < data.time.size(); ++i) {
      if (data.stratum[i] == st) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(),
              [&](Eigen::Index a, Eigen::Index b) { return data.time[a] < data.time[b]; });
    // distinct event times ascending; risk set = those with time >= t
    std::size_t start = 0;
    double cum = 0.0;
    while (start < idx.size()) {
      const double tt = data.time[idx[start]];
      int deaths = 0;
      std::size_t j = start;
      while (j < idx.size() && data.time[idx[j]] == tt) {
        if (data.event[idx[j]]) ++deaths;
        ++j;
      }
      if (deaths > 0) {
        double S0 = 0.0;
        for (std::size_t m = start; m < idx.size(); ++m) S0 += std::exp(lp[idx[m]]);
        const double inc = deaths / S0;
        cum += inc;
        fit.baseline[st].push_back({tt, inc, cum});
      }
      start = j;
    }
  }
  return fit;
}

SchoenfeldTest schoenfeld_test(const CoxFit& fit, TimeTransform transform) {
  const int p = static_cast<int>(fit.gamma.size());
  if (fit.n_events < 2) throw ValidationError("Schoenfeld test needs at least 2 events");
  if (fit.n_events <= p) throw ValidationError("fewer events than covariates");
  if (fit.strata_labels.size() > 1) {
    throw ValidationError("Schoenfeld test is not supported for stratified fits");
  }

  const Eigen::Index n = fit.event_times.size();
  const Eigen::VectorXd lp = fit.design * fit.gamma;

  // One residual per death: covariate minus the risk-set weighted mean.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return fit.event_times[a] < fit.event_times[b];
  });

  std::vector<double> death_times;
  std::vector<Eigen::VectorXd> resid;
  std::size_t start = 0;
  while (start < order.size()) {
    const double t = fit.event_times[order[start]];
    std::size_t j = start;
    int deaths = 0;
    while (j < order.size() && fit.event_times[order[j]] == t) {
      if (fit.events[order[j]]) ++deaths;
      ++j;
    }
    if (deaths > 0) {
      double S0 = 0.0;
      Eigen::VectorXd S1 = Eigen::VectorXd::Zero(p);
      for (std::size_t m = start; m < order.size(); ++m) {
        const Eigen::Index i = order[m];
        const double e = std::exp(lp[i]);
        S0 += e;
        S1.noalias() += e * fit.design.row(i).transpose();
      }
      const Eigen::VectorXd wbar = S1 / S0;
      for (std::size_t m = start; m < j; ++m) {
        const Eigen::Index i = order[m];
        if (fit.events[i]) {
          death_times.push_back(t);
          resid.push_back(fit.design.row(i).transpose() - wbar);
        }
      }
    }
    start = j;
  }

  const int d = static_cast<int>(resid.size());
  Eigen::VectorXd g(d);
  switch (transform) {
    case TimeTransform::Identity:
      for (int k = 0; k < d; ++k) g[k] = death_times[k];
      break;
    case TimeTransform::Rank: {
      for (int k = 0; k < d; ++k) g[k] = static_cast<double>(k + 1);
      // average ranks for tied death times
      int k = 0;
      while (k < d) {
        int j = k;
        while (j < d && death_times[j] == death_times[k]) ++j;
        const double avg = 0.5 * (k + 1 + j);
        for (int m = k; m < j; ++m) g[m] = avg;
        k = j;
      }
      break;
    }
    case TimeTransform::Km: {
      std::vector<SurvivalRecord> recs;
      for (Eigen::Index i = 0; i < n; ++i) {
        recs.push_back({fit.subject_ids[i], fit.event_times[i], fit.events[i], {}});
      }
      const KmCurve km = kaplan_meier(recs).front();
      for (int k = 0; k < d; ++k) {
        // left-continuous KM at the death time
        double s = 1.0;
        for (std::size_t m = 0; m < km.times.size() && km.times[m] < death_times[k]; ++m) {
          s = km.survival[m];
        }
        g[k] = 1.0 - s;
      }
      break;
    }
  }
  g.array() -= g.mean();
  const double gg = g.squaredNorm();
  if (gg <= 0.0) throw NumericError("degenerate time transform in Schoenfeld test");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < d; ++k) u += g[k] * resid[k];

  // Scaled residuals r* = d * s V; rho is their correlation with g.
  Eigen::MatrixXd scaled(d, p);
  for (int k = 0; k < d; ++k) scaled.row(k) = (fit.vcov * resid[k]).transpose() * d;

  SchoenfeldTest out;
  const Eigen::VectorXd Vu = fit.vcov * u;
  for (int jcol = 0; jcol < p; ++jcol) {
    const double chisq =
        d * Vu[jcol] * Vu[jcol] / (fit.vcov(jcol, jcol) * gg);
    Eigen::VectorXd col = scaled.col(jcol);
    col.array() -= col.mean();
    const double denom = std::sqrt(col.squaredNorm() * gg);
    const double rho = (denom > 0.0) ? g.dot(col) / denom : 0.0;
    out.per_covariate.push_back({fit.labels[jcol], rho, chisq, chisq_sf(chisq, 1.0)});
  }
  const double global_chisq = d * u.dot(Vu) / gg;
  out.global = {"GLOBAL", std::numeric_limits<double>::quiet_NaN(), global_chisq,
                chisq_sf(global_chisq, static_cast<double>(p))};
  return out;
}

std::string format_p_value(double p) {
  if (p < 1e-3) return "<0.001";
  std::ostringstream os;
  os.precision(3);
  os << p;
  return os.str();
}

}  // namespace jointfit
