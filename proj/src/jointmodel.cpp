#include "jointfit/jointmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "jointfit/errors.hpp"
#include "jointfit/parallel.hpp"
#include "jointfit/quadrature.hpp"
#include "jointfit/rng.hpp"

namespace jointfit {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::MatrixXd second_difference_penalty(int k) {
  Eigen::MatrixXd Dd = Eigen::MatrixXd::Zero(k - 2, k);
  for (int i = 0; i < k - 2; ++i) {
    Dd(i, i) = 1.0;
    Dd(i, i + 1) = -2.0;
    Dd(i, i + 2) = 1.0;
  }
  return Dd.transpose() * Dd;
}

// Variable names a formula needs besides the time variable.
std::set<std::string> formula_variables(const ModelFormula& f) {
  std::set<std::string> vars;
  for (const auto& t : f.terms) {
    vars.insert(t.name);
    if (t.kind == Term::Kind::Interaction) vars.insert(t.other);
  }
  return vars;
}

}  // namespace

struct JointModel::Impl {
  JointModelSpec spec;
  bool has_surv = false;
  bool has_slope = false;

  int N = 0;       // subjects
  int p = 0;       // fixed effects
  int q = 0;       // random effects
  int pw = 0;      // survival covariates
  int na = 0;      // association coefficients
  int K = 0;       // baseline spline size
  int n_obs = 0;
  int nq = 0;      // quadrature points per subject

  std::vector<std::string> subject_ids;

  // Longitudinal visits.
  Eigen::VectorXd y;
  Eigen::MatrixXd Xl, Zl;
  std::vector<int> obs_offset, obs_count;

  // Survival.
  Eigen::VectorXd T;
  std::vector<char> delta;
  Eigen::MatrixXd Wsurv;
  Eigen::VectorXd transform_cov;  // per subject, when a transform is set

  // Quadrature grid, nq contiguous rows per subject.
  Eigen::MatrixXd Xq, Zq, Xdq, Zdq, Bq;
  Eigen::VectorXd qw;

  // Event-time designs.
  Eigen::MatrixXd Xe, Ze, Xde, Zde, Be;

  std::optional<BSplineBasis> bs_basis;
  std::optional<DerivativeForm> dform_fixed, dform_random;
  std::vector<int> dfix_idx, dran_idx;

  Eigen::MatrixXd penalty;  // RW2 penalty on theta_bs
  Eigen::VectorXd theta_init;

  // Per-subject covariate values for rebuilding designs at arbitrary times.
  std::map<std::string, Eigen::VectorXd> subject_covariates;

  // ---- helpers -----------------------------------------------------------

  int Q() const { return N * nq; }

  Table times_table(const Eigen::VectorXd& times, const std::vector<int>& subj) const {
    Table t;
    t.ids.resize(times.size());
    for (Eigen::Index i = 0; i < times.size(); ++i) t.ids[i] = subject_ids[subj[i]];
    t.add(spec.time_var, times);
    for (const auto& [name, vals] : subject_covariates) {
      Eigen::VectorXd v(times.size());
      for (Eigen::Index i = 0; i < times.size(); ++i) v[i] = vals[subj[i]];
      t.add(name, v);
    }
    return t;
  }

  // Association contribution to the log-hazard for one subject at given
  // (mu, mud) feature values.
  double assoc_scalar(int i, const Eigen::VectorXd& alpha, const Eigen::MatrixXd& b) const {
    if (spec.association.type != AssociationType::SharedRandomEffects) return 0.0;
    return b.row(i).dot(alpha);
  }

  double assoc_mu_coef(int i, const Eigen::VectorXd& alpha) const {
    switch (spec.association.type) {
      case AssociationType::CurrentValue:
        return spec.association.transform ? alpha[0] + alpha[1] * transform_cov[i] : alpha[0];
      case AssociationType::CurrentValueSlope:
        return alpha[0];
      case AssociationType::SharedRandomEffects:
        return 0.0;
    }
    return 0.0;
  }

  double assoc_mud_coef(const Eigen::VectorXd& alpha) const {
    return spec.association.type == AssociationType::CurrentValueSlope ? alpha[1] : 0.0;
  }

  Eigen::VectorXd beta_sub(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd v(dfix_idx.size());
    for (std::size_t k = 0; k < dfix_idx.size(); ++k) v[k] = beta[dfix_idx[k]];
    return v;
  }

  Eigen::VectorXd b_sub(const Eigen::MatrixXd& b, int i) const {
    Eigen::VectorXd v(dran_idx.size());
    for (std::size_t k = 0; k < dran_idx.size(); ++k) v[k] = b(i, dran_idx[k]);
    return v;
  }
};

JointModel::~JointModel() = default;
JointModel::JointModel(JointModel&&) noexcept = default;

JointModel::JointModel(JointModelSpec spec, const JointDataset& data)
    : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.spec = std::move(spec);
  m.has_surv = m.spec.survival.has_value();
  const LmmFit& lmm = m.spec.longitudinal;

  if (m.spec.time_var.empty()) m.spec.time_var = data.longitudinal.schema.time;

  if (m.spec.association.type == AssociationType::SharedRandomEffects &&
      m.spec.association.transform) {
    throw ValidationError("shared-random-effects association does not support a transform");
  }

  // Subjects in dataset order (sorted by id).
  for (const auto& r : data.survival.records) m.subject_ids.push_back(r.subject_id);
  m.N = static_cast<int>(m.subject_ids.size());
  if (lmm.subject_ids != m.subject_ids) {
    throw ValidationError(
        "joint model requires every survival subject to have longitudinal visits "
        "and submodels fitted on the same dataset");
  }
  if (m.has_surv && m.spec.survival->subject_ids != m.subject_ids) {
    throw ValidationError("Cox submodel subjects do not match the dataset");
  }

  m.p = static_cast<int>(lmm.beta.size());
  m.q = static_cast<int>(lmm.D.rows());
  m.pw = m.has_surv ? static_cast<int>(m.spec.survival->gamma.size()) : 0;

  // Longitudinal visit designs (rebuilt with the frozen builders).
  const Table lt = longitudinal_table(data);
  const DesignMatrix Xall = lmm.fixed_builder.build(lt);
  const DesignMatrix Zall = lmm.random_builder.build(lt);
  m.n_obs = static_cast<int>(lt.nrows());
  m.Xl = Xall.values;
  m.Zl = Zall.values;
  m.y = lt.col(lmm.fixed_formula.response);
  m.obs_offset.assign(m.N, 0);
  m.obs_count.assign(m.N, 0);
  {
    int subj = 0;
    for (Eigen::Index i = 0; i < lt.nrows(); ++i) {
      while (lt.ids[i] != m.subject_ids[subj]) {
        ++subj;
        m.obs_offset[subj] = static_cast<int>(i);
      }
      ++m.obs_count[subj];
    }
  }

  // Subject-level values for every covariate either formula mentions,
  // taken from the first visit (time-constant covariates assumed).
  {
    std::set<std::string> vars = formula_variables(lmm.fixed_formula);
    auto rv = formula_variables(lmm.random_formula);
    vars.insert(rv.begin(), rv.end());
    vars.erase(m.spec.time_var);
    for (const auto& name : vars) {
      Eigen::VectorXd v(m.N);
      for (int i = 0; i < m.N; ++i) v[i] = lt.col(name)[m.obs_offset[i]];
      m.subject_covariates.emplace(name, std::move(v));
    }
  }

  // Survival side.
  m.T.resize(m.N);
  m.delta.assign(m.N, 0);
  for (int i = 0; i < m.N; ++i) {
    m.T[i] = data.survival.records[i].event_time;
    m.delta[i] = data.survival.records[i].event ? 1 : 0;
  }

  if (m.has_surv) {
    m.Wsurv = m.spec.survival->design;

    switch (m.spec.association.type) {
      case AssociationType::CurrentValue:
        m.na = m.spec.association.transform ? 2 : 1;
        break;
      case AssociationType::CurrentValueSlope:
        m.na = 2;
        break;
      case AssociationType::SharedRandomEffects:
        m.na = m.q;
        break;
    }
    if (m.spec.association.transform) {
      const auto& cov = m.spec.association.transform->interacting_covariate;
      m.transform_cov.resize(m.N);
      for (int i = 0; i < m.N; ++i) {
        auto it = data.survival.records[i].baseline_covariates.find(cov);
        if (it == data.survival.records[i].baseline_covariates.end()) {
          throw ValidationError("transform covariate '" + cov + "' missing for subject '" +
                                m.subject_ids[i] + "'");
        }
        m.transform_cov[i] = it->second;
      }
    }

    // Baseline hazard spline over [0, max event time].
    const double hi = m.T.maxCoeff();
    Eigen::VectorXd event_times;
    {
      std::vector<double> et;
      for (int i = 0; i < m.N; ++i) {
        if (m.delta[i]) et.push_back(m.T[i]);
      }
      if (et.empty()) throw ValidationError("no events in the survival data");
      event_times = Eigen::Map<Eigen::VectorXd>(et.data(), static_cast<Eigen::Index>(et.size()));
    }
    m.K = m.spec.baseline_df;
    m.bs_basis = BSplineBasis::for_baseline(event_times, m.K, 0.0, hi);
    m.penalty = second_difference_penalty(m.K);

    // Slope association needs the symbolic derivative designs.
    m.has_slope = m.spec.association.type == AssociationType::CurrentValueSlope;
    if (m.has_slope) {
      try {
        m.dform_fixed = lmm.fixed_builder.derivative(m.spec.time_var);
        m.dfix_idx = m.dform_fixed->coef_indices;
      } catch (const ValidationError&) {
        m.dform_fixed.reset();
      }
      try {
        m.dform_random = lmm.random_builder.derivative(m.spec.time_var);
        m.dran_idx = m.dform_random->coef_indices;
      } catch (const ValidationError&) {
        m.dform_random.reset();
      }
    }

    // Quadrature grid: `quad_segments` GK15 panels on [0, T_i] per subject.
    m.nq = 15 * m.spec.quad_segments;
    const int Q = m.N * m.nq;
    Eigen::VectorXd qt(Q);
    m.qw.resize(Q);
    std::vector<int> qsubj(Q);
    for (int i = 0; i < m.N; ++i) {
      Eigen::VectorXd nodes, weights;
      quadrature_grid(m.T[i], m.spec.quad_segments, nodes, weights);
      qt.segment(i * m.nq, m.nq) = nodes;
      m.qw.segment(i * m.nq, m.nq) = weights;
      for (int j = 0; j < m.nq; ++j) qsubj[i * m.nq + j] = i;
    }
    const Table qtab = m.times_table(qt, qsubj);
    m.Xq = lmm.fixed_builder.build(qtab).values;
    m.Zq = lmm.random_builder.build(qtab).values;
    m.Bq = m.bs_basis->evaluate(qt);

    std::vector<int> esubj(m.N);
    for (int i = 0; i < m.N; ++i) esubj[i] = i;
    const Table etab = m.times_table(m.T, esubj);
    m.Xe = lmm.fixed_builder.build(etab).values;
    m.Ze = lmm.random_builder.build(etab).values;
    m.Be = m.bs_basis->evaluate(m.T);

    if (m.has_slope) {
      if (m.dform_fixed) {
        m.Xdq = lmm.fixed_builder.build_derivative(*m.dform_fixed, qtab).values;
        m.Xde = lmm.fixed_builder.build_derivative(*m.dform_fixed, etab).values;
      }
      if (m.dform_random) {
        m.Zdq = lmm.random_builder.build_derivative(*m.dform_random, qtab).values;
        m.Zde = lmm.random_builder.build_derivative(*m.dform_random, etab).values;
      }
    }

    // Initial baseline coefficients: constant log-hazard at the crude event
    // rate (the clamped B-spline basis sums to one, so a constant coefficient
    // vector is an exactly constant log h0). Robust, unlike a least-squares
    // fit to noisy log Breslow increments.
    int n_events = 0;
    for (int i = 0; i < m.N; ++i) n_events += m.delta[i];
    const double crude = std::max(n_events / m.T.sum(), 1e-10);
    m.theta_init = Eigen::VectorXd::Constant(m.K, std::log(crude));
  } else {
    m.K = 0;
    m.na = 0;
    m.nq = 0;
  }
}

const JointModelSpec& JointModel::spec() const { return impl_->spec; }
int JointModel::n_subjects() const { return impl_->N; }
int JointModel::n_random_effects() const { return impl_->q; }
int JointModel::n_association() const { return impl_->na; }
const BSplineBasis& JointModel::baseline_basis() const {
  if (!impl_->bs_basis) throw ValidationError("model has no survival part");
  return *impl_->bs_basis;
}

std::vector<std::string> JointModel::parameter_labels() const {
  const Impl& m = *impl_;
  std::vector<std::string> labels;
  for (const auto& l : m.spec.longitudinal.fixed_labels) labels.push_back(l);
  labels.push_back("sigma2");
  for (int i = 0; i < m.q; ++i) {
    for (int j = 0; j <= i; ++j) {
      labels.push_back("D[" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + "]");
    }
  }
  if (m.has_surv) {
    for (const auto& l : m.spec.survival->labels) labels.push_back(l);
    switch (m.spec.association.type) {
      case AssociationType::CurrentValue:
        labels.push_back("Assoct");
        if (m.spec.association.transform) {
          labels.push_back("Assoct:" + m.spec.association.transform->interacting_covariate);
        }
        break;
      case AssociationType::CurrentValueSlope:
        labels.push_back("Assoct");
        labels.push_back("AssoctE");
        break;
      case AssociationType::SharedRandomEffects:
        for (const auto& l : m.spec.longitudinal.random_labels) {
          labels.push_back("Assoct:" + l);
        }
        break;
    }
    for (int k = 0; k < m.K; ++k) labels.push_back("logh0.b" + std::to_string(k + 1));
    labels.push_back("tauBs");
  }
  return labels;
}

JointParameters JointModel::initial_values() const {
  const Impl& m = *impl_;
  JointParameters st;
  st.beta = m.spec.longitudinal.beta;
  st.sigma2 = m.spec.longitudinal.sigma2;
  st.D = m.spec.longitudinal.D;
  st.b = m.spec.longitudinal.blups;
  if (m.has_surv) {
    st.gamma = m.spec.survival->gamma;
    st.alpha = Eigen::VectorXd::Zero(m.na);
    st.theta_bs = m.theta_init;
    st.taubs = 1.0;
  } else {
    st.gamma.resize(0);
    st.alpha.resize(0);
    st.theta_bs.resize(0);
  }
  return st;
}

double JointModel::log_likelihood_longitudinal(const JointParameters& params) const {
  const Impl& m = *impl_;
  Eigen::VectorXd mu = (m.p > 0) ? (m.Xl * params.beta).eval()
                                 : Eigen::VectorXd::Zero(m.n_obs).eval();
  for (int i = 0; i < m.N; ++i) {
    if (m.q > 0) {
      mu.segment(m.obs_offset[i], m.obs_count[i]).noalias() +=
          m.Zl.middleRows(m.obs_offset[i], m.obs_count[i]) * params.b.row(i).transpose();
    }
  }
  const double sse = (m.y - mu).squaredNorm();
  const double ll =
      -0.5 * m.n_obs * (kLog2Pi + std::log(params.sigma2)) - 0.5 * sse / params.sigma2;
  if (!std::isfinite(ll)) throw NumericError("non-finite longitudinal log-likelihood");
  return ll;
}

double JointModel::hazard(int subject, double t, const JointParameters& params) const {
  const Impl& m = *impl_;
  if (!m.has_surv) throw ValidationError("model has no survival part");
  const LmmFit& lmm = m.spec.longitudinal;

  Eigen::VectorXd tv(1);
  tv[0] = t;
  const Table tab = m.times_table(tv, {subject});

  double lp = m.bs_basis->evaluate_one(t).dot(params.theta_bs);
  if (m.pw > 0) lp += m.Wsurv.row(subject).dot(params.gamma);

  if (m.spec.association.type == AssociationType::SharedRandomEffects) {
    lp += params.b.row(subject).dot(params.alpha);
  } else {
    const Eigen::RowVectorXd xr = lmm.fixed_builder.build(tab).values.row(0);
    const Eigen::RowVectorXd zr = lmm.random_builder.build(tab).values.row(0);
    double mu = xr.dot(params.beta);
    if (m.q > 0) mu += zr.dot(params.b.row(subject));
    lp += m.assoc_mu_coef(subject, params.alpha) * mu;
    if (m.spec.association.type == AssociationType::CurrentValueSlope) {
      double mud = 0.0;
      if (m.dform_fixed) {
        const Eigen::RowVectorXd xd = lmm.fixed_builder.build_derivative(*m.dform_fixed, tab)
                                          .values.row(0);
        mud += xd.dot(m.beta_sub(params.beta));
      }
      if (m.dform_random && m.q > 0) {
        const Eigen::RowVectorXd zd =
            lmm.random_builder.build_derivative(*m.dform_random, tab).values.row(0);
        mud += zd.dot(m.b_sub(params.b, subject));
      }
      lp += m.assoc_mud_coef(params.alpha) * mud;
    }
  }
  const double h = std::exp(lp);
  if (!std::isfinite(h)) {
    throw NumericError("hazard overflow at t=" + format_double(t) +
                       " (linear predictor " + format_double(lp) + ")");
  }
  return h;
}

double JointModel::cumulative_hazard(int subject, double t, const JointParameters& params) const {
  const Impl& m = *impl_;
  return integrate_gk15([&](double s) { return hazard(subject, s, params); }, 0.0, t,
                        m.spec.quad_segments);
}

Eigen::VectorXd JointModel::subject_loglik(const JointParameters& params) const {
  const Impl& m = *impl_;
  Eigen::VectorXd ll = Eigen::VectorXd::Zero(m.N);

  // Longitudinal part.
  Eigen::VectorXd mu = (m.p > 0) ? (m.Xl * params.beta).eval()
                                 : Eigen::VectorXd::Zero(m.n_obs).eval();
  for (int i = 0; i < m.N; ++i) {
    if (m.q > 0 && m.obs_count[i] > 0) {
      mu.segment(m.obs_offset[i], m.obs_count[i]).noalias() +=
          m.Zl.middleRows(m.obs_offset[i], m.obs_count[i]) * params.b.row(i).transpose();
    }
    const double sse =
        (m.y.segment(m.obs_offset[i], m.obs_count[i]) -
         mu.segment(m.obs_offset[i], m.obs_count[i]))
            .squaredNorm();
    ll[i] = -0.5 * m.obs_count[i] * (kLog2Pi + std::log(params.sigma2)) -
            0.5 * sse / params.sigma2;
  }
  if (!m.has_surv) return ll;

  // Survival part.
  Eigen::VectorXd bs_q = m.Bq * params.theta_bs;
  Eigen::VectorXd bs_e = m.Be * params.theta_bs;
  Eigen::VectorXd eta_w = (m.pw > 0) ? (m.Wsurv * params.gamma).eval()
                                     : Eigen::VectorXd::Zero(m.N).eval();
  Eigen::VectorXd mu_q, mu_e, mud_q, mud_e;
  const bool need_mu = m.spec.association.type != AssociationType::SharedRandomEffects;
  if (need_mu) {
    mu_q = m.Xq * params.beta;
    mu_e = m.Xe * params.beta;
    for (int i = 0; i < m.N; ++i) {
      if (m.q > 0) {
        mu_q.segment(i * m.nq, m.nq).noalias() +=
            m.Zq.middleRows(i * m.nq, m.nq) * params.b.row(i).transpose();
        mu_e[i] += m.Ze.row(i).dot(params.b.row(i));
      }
    }
    if (m.has_slope) {
      mud_q = Eigen::VectorXd::Zero(m.Q());
      mud_e = Eigen::VectorXd::Zero(m.N);
      if (m.dform_fixed) {
        const Eigen::VectorXd bsub = m.beta_sub(params.beta);
        mud_q.noalias() += m.Xdq * bsub;
        mud_e.noalias() += m.Xde * bsub;
      }
      if (m.dform_random) {
        for (int i = 0; i < m.N; ++i) {
          const Eigen::VectorXd bi = m.b_sub(params.b, i);
          mud_q.segment(i * m.nq, m.nq).noalias() += m.Zdq.middleRows(i * m.nq, m.nq) * bi;
          mud_e[i] += m.Zde.row(i).dot(bi);
        }
      }
    }
  }

  for (int i = 0; i < m.N; ++i) {
    const double shared = m.assoc_scalar(i, params.alpha, params.b);
    const double cmu = m.has_surv ? m.assoc_mu_coef(i, params.alpha) : 0.0;
    const double cmud = m.assoc_mud_coef(params.alpha);
    double lh_e = bs_e[i] + eta_w[i] + shared;
    if (need_mu) {
      lh_e += cmu * mu_e[i];
      if (m.has_slope) lh_e += cmud * mud_e[i];
    }
    auto seg = [&](const Eigen::VectorXd& v) { return v.segment(i * m.nq, m.nq).array(); };
    Eigen::ArrayXd lh = seg(bs_q) + eta_w[i] + shared;
    if (need_mu) {
      lh += cmu * seg(mu_q);
      if (m.has_slope) lh += cmud * seg(mud_q);
    }
    const double H = (seg(m.qw) * lh.exp()).sum();
    if (!std::isfinite(H)) {
      throw NumericError("cumulative hazard overflow for subject " + m.subject_ids[i]);
    }
    ll[i] += (m.delta[i] ? lh_e : 0.0) - H;
  }
  return ll;
}

double JointModel::log_likelihood_survival(const JointParameters& params) const {
  const Impl& m = *impl_;
  if (!m.has_surv) return 0.0;
  const Eigen::VectorXd both = subject_loglik(params);
  return both.sum() - log_likelihood_longitudinal(params);
}

double JointModel::log_posterior(const JointParameters& params) const {
  const Impl& m = *impl_;
  double lp = subject_loglik(params).sum();

  // Random-effects density.
  if (m.q > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(params.D);
    if (llt.info() != Eigen::Success) throw NumericError("D not positive definite");
    double logdet = 0.0;
    for (int i = 0; i < m.q; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    for (int i = 0; i < m.N; ++i) {
      const Eigen::VectorXd bi = params.b.row(i).transpose();
      lp += -0.5 * m.q * kLog2Pi - 0.5 * logdet - 0.5 * bi.dot(llt.solve(bi));
    }
    // inverse-Wishart(q + extra, I) prior on D.
    const double nu = m.q + m.spec.priors.wishart_extra_df;
    lp += -0.5 * (nu + m.q + 1) * logdet -
          0.5 * llt.solve(Eigen::MatrixXd::Identity(m.q, m.q)).trace();
  }

  // Coefficient priors.
  const double v = m.spec.priors.coef_sd * m.spec.priors.coef_sd;
  lp += -0.5 * params.beta.squaredNorm() / v;
  if (m.has_surv) {
    lp += -0.5 * params.gamma.squaredNorm() / v;
    lp += -0.5 * params.alpha.squaredNorm() / v;
    // RW2 penalty with precision tauBs, plus its Gamma prior.
    const double quad = params.theta_bs.dot(m.penalty * params.theta_bs);
    lp += 0.5 * (m.K - 2) * std::log(params.taubs) - 0.5 * params.taubs * quad;
    lp += (m.spec.priors.taubs_shape - 1.0) * std::log(params.taubs) -
          m.spec.priors.taubs_rate * params.taubs;
  }
  // inverse-Gamma prior on sigma^2.
  lp += -(m.spec.priors.sigma2_shape + 1.0) * std::log(params.sigma2) -
        m.spec.priors.sigma2_rate / params.sigma2;

  if (!std::isfinite(lp)) throw NumericError("non-finite log-posterior");
  return lp;
}

// ---------------------------------------------------------------------------
// MCMC engine
// ---------------------------------------------------------------------------

namespace {

class McmcEngine {
 public:
  McmcEngine(const JointModel::Impl& m, const JointModel& model, McmcConfig cfg)
      : m_(m), model_(model), cfg_(cfg), rng_(Rng::derive(cfg.seed, 0)) {}

  PosteriorChains run();

 private:
  const JointModel::Impl& m_;
  const JointModel& model_;
  McmcConfig cfg_;
  Rng rng_;

  JointParameters st_;
  Eigen::MatrixXd Dinv_;
  double logdetD_ = 0.0;

  // Caches split into fixed-effect and random-effect contributions.
  Eigen::VectorXd xb_obs_, zb_obs_;
  Eigen::VectorXd xb_q_, zb_q_, xb_e_, zb_e_;
  Eigen::VectorXd xdb_q_, zdb_q_, xdb_e_, zdb_e_;
  Eigen::VectorXd bs_q_, bs_e_, eta_w_;
  Eigen::VectorXd ll_long_, ll_surv_;

  // Proposal machinery.
  Eigen::VectorXd beta_sd_, ga_sd_, bs_sd_, b_sd_;
  double ls_beta_ = 0.0, ls_ga_ = 0.0;
  Eigen::VectorXd ls_b_;

  // Running posterior covariance during adaptation; once enough states have
  // been seen the block proposal switches from a diagonal random walk to a
  // correlated one, which is essential for strongly coupled blocks such as
  // (gamma, alpha) under the value+slope association.
  struct AdaptiveCov {
    long n = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd m2;    // sum of centered outer products
    Eigen::MatrixXd chol;  // lower Cholesky factor of the regularized covariance

    void observe(const Eigen::VectorXd& x) {
      if (n == 0) {
        mean = Eigen::VectorXd::Zero(x.size());
        m2 = Eigen::MatrixXd::Zero(x.size(), x.size());
      }
      ++n;
      const Eigen::VectorXd d = x - mean;
      mean += d / static_cast<double>(n);
      m2.noalias() += d * (x - mean).transpose();
    }

    bool ready() const { return chol.size() > 0; }

    bool refresh() {
      if (n < 200) return false;
      Eigen::MatrixXd cov = m2 / static_cast<double>(n - 1);
      cov.diagonal().array() += 1e-12 + 1e-6 * cov.diagonal().mean();
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) return false;
      chol = llt.matrixL();
      return true;
    }
  };
  AdaptiveCov surv_cov_;
  struct Counter {
    long accept = 0, attempt = 0, batch_accept = 0, batch_attempt = 0;
    double rate() const { return attempt ? double(accept) / attempt : 0.0; }
  };
  Counter c_beta_, c_ga_;
  std::vector<Counter> c_b_;

  void initialize();
  void refresh_surv_ll();
  double subject_surv_ll(int i, double cmu, double cmud, double shared,
                         const Eigen::VectorXd& bs_q, const Eigen::VectorXd& bs_e,
                         double eta, const Eigen::VectorXd& xb_q, const Eigen::VectorXd& zb_q,
                         double mu_e, const Eigen::VectorXd& xdb_q,
                         const Eigen::VectorXd& zdb_q, double mud_e) const;
  double subject_long_ll(int i, const Eigen::VectorXd& xb_obs,
                         const Eigen::VectorXd& zb_obs) const;

  void update_beta(int iter);
  void update_surv_params(int iter);
  void update_b(int iter);
  void gibbs_sigma2();
  void gibbs_D();
  void gibbs_taubs();
  void adapt(int iter);
};

void McmcEngine::initialize() {
  st_ = model_.initial_values();
  const auto& m = m_;

  if (m.q > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(st_.D);
    Dinv_ = llt.solve(Eigen::MatrixXd::Identity(m.q, m.q));
    logdetD_ = 0.0;
    for (int i = 0; i < m.q; ++i) logdetD_ += 2.0 * std::log(llt.matrixL()(i, i));
  }

  auto zvec = [](int n) { return Eigen::VectorXd::Zero(n).eval(); };
  xb_obs_ = (m.p > 0) ? (m.Xl * st_.beta).eval() : zvec(m.n_obs);
  zb_obs_ = zvec(m.n_obs);
  for (int i = 0; i < m.N; ++i) {
    if (m.q > 0 && m.obs_count[i] > 0) {
      zb_obs_.segment(m.obs_offset[i], m.obs_count[i]).noalias() =
          m.Zl.middleRows(m.obs_offset[i], m.obs_count[i]) * st_.b.row(i).transpose();
    }
  }
  ll_long_.resize(m.N);
  for (int i = 0; i < m.N; ++i) ll_long_[i] = subject_long_ll(i, xb_obs_, zb_obs_);

  if (m.has_surv) {
    const int Q = m.Q();
    xb_q_ = m.Xq * st_.beta;
    xb_e_ = m.Xe * st_.beta;
    zb_q_ = zvec(Q);
    zb_e_ = zvec(m.N);
    for (int i = 0; i < m.N; ++i) {
      if (m.q > 0) {
        zb_q_.segment(i * m.nq, m.nq).noalias() =
            m.Zq.middleRows(i * m.nq, m.nq) * st_.b.row(i).transpose();
        zb_e_[i] = m.Ze.row(i).dot(st_.b.row(i));
      }
    }
    xdb_q_ = zvec(Q);
    xdb_e_ = zvec(m.N);
    zdb_q_ = zvec(Q);
    zdb_e_ = zvec(m.N);
    if (m.has_slope) {
      if (m.dform_fixed) {
        const Eigen::VectorXd bsub = m.beta_sub(st_.beta);
        xdb_q_ = m.Xdq * bsub;
        xdb_e_ = m.Xde * bsub;
      }
      if (m.dform_random) {
        for (int i = 0; i < m.N; ++i) {
          const Eigen::VectorXd bi = m.b_sub(st_.b, i);
          zdb_q_.segment(i * m.nq, m.nq).noalias() = m.Zdq.middleRows(i * m.nq, m.nq) * bi;
          zdb_e_[i] = m.Zde.row(i).dot(bi);
        }
      }
    }
    bs_q_ = m.Bq * st_.theta_bs;
    bs_e_ = m.Be * st_.theta_bs;
    eta_w_ = (m.pw > 0) ? (m.Wsurv * st_.gamma).eval() : zvec(m.N);
    ll_surv_.resize(m.N);
    refresh_surv_ll();
  }

  // Proposal scales.
  beta_sd_ = m.spec.longitudinal.vcov_beta.diagonal().cwiseSqrt();
  if (m.has_surv) {
    ga_sd_.resize(m.pw + m.na);
    if (m.pw > 0) ga_sd_.head(m.pw) = m.spec.survival->se;
    ga_sd_.tail(m.na).setConstant(0.1);
    bs_sd_ = Eigen::VectorXd::Constant(m.K, 0.25);
  }
  if (m.q > 0) b_sd_ = st_.D.diagonal().cwiseSqrt();
  ls_beta_ = std::log(2.38 / std::sqrt(std::max(m.p, 1)));
  ls_ga_ = std::log(2.38 / std::sqrt(std::max(m.pw + m.na, 1)));
  ls_b_ = Eigen::VectorXd::Zero(m.N);
  c_b_.resize(m.N);

  // Fail fast on a bad starting point.
  const double lp0 = ll_long_.sum() + (m.has_surv ? ll_surv_.sum() : 0.0);
  if (!std::isfinite(lp0)) {
    throw NumericError("non-finite posterior at the initial values");
  }
}

double McmcEngine::subject_long_ll(int i, const Eigen::VectorXd& xb_obs,
                                   const Eigen::VectorXd& zb_obs) const {
  const auto& m = m_;
  const int o = m.obs_offset[i], c = m.obs_count[i];
  const double sse =
      (m.y.segment(o, c) - xb_obs.segment(o, c) - zb_obs.segment(o, c)).squaredNorm();
  return -0.5 * c * (kLog2Pi + std::log(st_.sigma2)) - 0.5 * sse / st_.sigma2;
}

double McmcEngine::subject_surv_ll(int i, double cmu, double cmud, double shared,
                                   const Eigen::VectorXd& bs_q, const Eigen::VectorXd& bs_e,
                                   double eta, const Eigen::VectorXd& xb_q,
                                   const Eigen::VectorXd& zb_q, double mu_e,
                                   const Eigen::VectorXd& xdb_q, const Eigen::VectorXd& zdb_q,
                                   double mud_e) const {
  const auto& m = m_;
  const int o = i * m.nq;
  Eigen::ArrayXd lh = bs_q.segment(o, m.nq).array() + eta + shared;
  if (cmu != 0.0) lh += cmu * (xb_q.segment(o, m.nq).array() + zb_q.segment(o, m.nq).array());
  if (cmud != 0.0) lh += cmud * (xdb_q.segment(o, m.nq).array() + zdb_q.segment(o, m.nq).array());
  const double H = (m.qw.segment(o, m.nq).array() * lh.exp()).sum();
  double lh_e = bs_e[i] + eta + shared + cmu * mu_e + cmud * mud_e;
  return (m.delta[i] ? lh_e : 0.0) - H;
}

void McmcEngine::refresh_surv_ll() {
  const auto& m = m_;
  parallel_for(m.N, [&](std::size_t i) {
    const int ii = static_cast<int>(i);
    const double shared = m.assoc_scalar(ii, st_.alpha, st_.b);
    const double cmu = m.assoc_mu_coef(ii, st_.alpha);
    const double cmud = m.assoc_mud_coef(st_.alpha);
    ll_surv_[ii] = subject_surv_ll(ii, cmu, cmud, shared, bs_q_, bs_e_, eta_w_[ii], xb_q_,
                                   zb_q_, xb_e_[ii] + zb_e_[ii], xdb_q_, zdb_q_,
                                   xdb_e_[ii] + zdb_e_[ii]);
  });
}

void McmcEngine::update_beta(int iter) {
  const auto& m = m_;
  if (m.p == 0) return;
  (void)iter;
  ++c_beta_.attempt;
  ++c_beta_.batch_attempt;

  Eigen::VectorXd prop = st_.beta;
  const double scale = std::exp(ls_beta_);
  for (int j = 0; j < m.p; ++j) prop[j] += scale * beta_sd_[j] * rng_.normal();

  Eigen::VectorXd xb_obs_p = m.Xl * prop;
  Eigen::VectorXd ll_long_p(m.N);
  parallel_for(m.N, [&](std::size_t i) {
    ll_long_p[static_cast<Eigen::Index>(i)] =
        subject_long_ll(static_cast<int>(i), xb_obs_p, zb_obs_);
  });

  double delta_ll = ll_long_p.sum() - ll_long_.sum();

  // Survival side only responds to beta through mu.
  const bool mu_in_hazard =
      m.has_surv && m.spec.association.type != AssociationType::SharedRandomEffects;
  Eigen::VectorXd xb_q_p, xb_e_p, xdb_q_p, xdb_e_p, ll_surv_p;
  if (mu_in_hazard) {
    xb_q_p = m.Xq * prop;
    xb_e_p = m.Xe * prop;
    if (m.has_slope && m.dform_fixed) {
      const Eigen::VectorXd bsub = m.beta_sub(prop);
      xdb_q_p = m.Xdq * bsub;
      xdb_e_p = m.Xde * bsub;
    } else {
      xdb_q_p = xdb_q_;
      xdb_e_p = xdb_e_;
    }
    ll_surv_p.resize(m.N);
    parallel_for(m.N, [&](std::size_t i) {
      const int ii = static_cast<int>(i);
      const double shared = m.assoc_scalar(ii, st_.alpha, st_.b);
      const double cmu = m.assoc_mu_coef(ii, st_.alpha);
      const double cmud = m.assoc_mud_coef(st_.alpha);
      ll_surv_p[ii] = subject_surv_ll(ii, cmu, cmud, shared, bs_q_, bs_e_, eta_w_[ii], xb_q_p,
                                      zb_q_, xb_e_p[ii] + zb_e_[ii], xdb_q_p, zdb_q_,
                                      xdb_e_p[ii] + zdb_e_[ii]);
    });
    delta_ll += ll_surv_p.sum() - ll_surv_.sum();
  }

  const double v = m.spec.priors.coef_sd * m.spec.priors.coef_sd;
  delta_ll += -0.5 * (prop.squaredNorm() - st_.beta.squaredNorm()) / v;

  if (std::isfinite(delta_ll) && std::log(rng_.uniform() + 1e-300) < delta_ll) {
    st_.beta = std::move(prop);
    xb_obs_ = std::move(xb_obs_p);
    ll_long_ = std::move(ll_long_p);
    if (mu_in_hazard) {
      xb_q_ = std::move(xb_q_p);
      xb_e_ = std::move(xb_e_p);
      xdb_q_ = std::move(xdb_q_p);
      xdb_e_ = std::move(xdb_e_p);
      ll_surv_ = std::move(ll_surv_p);
    }
    ++c_beta_.accept;
    ++c_beta_.batch_accept;
  }
}

// Joint update of (gamma, alpha, theta_bs). These parameters are strongly
// coupled through the average hazard level (any shift in the association
// contribution is absorbed by the baseline), so updating them in one
// covariance-shaped block mixes far better than separate random walks.
void McmcEngine::update_surv_params(int iter) {
  const auto& m = m_;
  if (!m.has_surv) return;
  ++c_ga_.attempt;
  ++c_ga_.batch_attempt;

  const int d = m.pw + m.na + m.K;
  const double scale = std::exp(ls_ga_);
  Eigen::VectorXd z(d);
  for (int j = 0; j < d; ++j) z[j] = rng_.normal();
  Eigen::VectorXd step;
  if (surv_cov_.ready()) {
    step = scale * (surv_cov_.chol * z);
  } else {
    Eigen::VectorXd sd(d);
    sd.head(m.pw + m.na) = ga_sd_;
    sd.tail(m.K) = bs_sd_;
    step = scale * sd.cwiseProduct(z);
  }
  Eigen::VectorXd gamma_p = st_.gamma + step.head(m.pw);
  Eigen::VectorXd alpha_p = st_.alpha + step.segment(m.pw, m.na);
  Eigen::VectorXd theta_p = st_.theta_bs + step.tail(m.K);

  Eigen::VectorXd eta_p = (m.pw > 0) ? (m.Wsurv * gamma_p).eval()
                                     : Eigen::VectorXd::Zero(m.N).eval();
  Eigen::VectorXd bs_q_p = m.Bq * theta_p;
  Eigen::VectorXd bs_e_p = m.Be * theta_p;
  Eigen::VectorXd ll_surv_p(m.N);
  parallel_for(m.N, [&](std::size_t i) {
    const int ii = static_cast<int>(i);
    const double shared = m.assoc_scalar(ii, alpha_p, st_.b);
    const double cmu = m.assoc_mu_coef(ii, alpha_p);
    const double cmud = m.assoc_mud_coef(alpha_p);
    ll_surv_p[ii] = subject_surv_ll(ii, cmu, cmud, shared, bs_q_p, bs_e_p, eta_p[ii], xb_q_,
                                    zb_q_, xb_e_[ii] + zb_e_[ii], xdb_q_, zdb_q_,
                                    xdb_e_[ii] + zdb_e_[ii]);
  });

  const double v = m.spec.priors.coef_sd * m.spec.priors.coef_sd;
  double delta_ll = ll_surv_p.sum() - ll_surv_.sum();
  delta_ll += -0.5 * (gamma_p.squaredNorm() - st_.gamma.squaredNorm()) / v;
  delta_ll += -0.5 * (alpha_p.squaredNorm() - st_.alpha.squaredNorm()) / v;
  delta_ll += -0.5 * st_.taubs *
              (theta_p.dot(m.penalty * theta_p) - st_.theta_bs.dot(m.penalty * st_.theta_bs));

  if (std::isfinite(delta_ll) && std::log(rng_.uniform() + 1e-300) < delta_ll) {
    st_.gamma = std::move(gamma_p);
    st_.alpha = std::move(alpha_p);
    st_.theta_bs = std::move(theta_p);
    eta_w_ = std::move(eta_p);
    bs_q_ = std::move(bs_q_p);
    bs_e_ = std::move(bs_e_p);
    ll_surv_ = std::move(ll_surv_p);
    ++c_ga_.accept;
    ++c_ga_.batch_accept;
  }

  if (iter < cfg_.adapt) {
    Eigen::VectorXd x(d);
    x.head(m.pw) = st_.gamma;
    x.segment(m.pw, m.na) = st_.alpha;
    x.tail(m.K) = st_.theta_bs;
    surv_cov_.observe(x);
  }
}

void McmcEngine::update_b(int iter) {
  const auto& m = m_;
  if (m.q == 0) return;

  parallel_for(m.N, [&](std::size_t s) {
    const int i = static_cast<int>(s);
    Rng rng = Rng::derive(cfg_.seed, s + 1, static_cast<std::uint64_t>(iter));
    ++c_b_[i].attempt;
    ++c_b_[i].batch_attempt;

    Eigen::VectorXd bi = st_.b.row(i).transpose();
    Eigen::VectorXd prop = bi;
    const double scale = std::exp(ls_b_[i]);
    for (int j = 0; j < m.q; ++j) prop[j] += scale * b_sd_[j] * rng.normal();

    const int o = m.obs_offset[i], c = m.obs_count[i];
    Eigen::VectorXd zb_obs_p = m.Zl.middleRows(o, c) * prop;
    const double sse =
        (m.y.segment(o, c) - xb_obs_.segment(o, c) - zb_obs_p).squaredNorm();
    const double ll_long_p =
        -0.5 * c * (kLog2Pi + std::log(st_.sigma2)) - 0.5 * sse / st_.sigma2;

    double delta_ll = ll_long_p - ll_long_[i];
    // Random-effects prior.
    delta_ll += -0.5 * (prop.dot(Dinv_ * prop) - bi.dot(Dinv_ * bi));

    double ll_surv_p = 0.0;
    Eigen::VectorXd zb_q_p, zdb_q_p;
    double zb_e_p = 0.0, zdb_e_p = 0.0;
    if (m.has_surv) {
      const int oq = i * m.nq;
      zb_q_p = m.Zq.middleRows(oq, m.nq) * prop;
      zb_e_p = m.Ze.row(i).dot(prop);
      if (m.has_slope && m.dform_random) {
        const Eigen::VectorXd bsubp = [&] {
          Eigen::VectorXd v(m.dran_idx.size());
          for (std::size_t k = 0; k < m.dran_idx.size(); ++k) v[k] = prop[m.dran_idx[k]];
          return v;
        }();
        zdb_q_p = m.Zdq.middleRows(oq, m.nq) * bsubp;
        zdb_e_p = m.Zde.row(i).dot(bsubp);
      }

      // Per-subject survival log-likelihood with the proposed b_i.
      const double shared =
          (m.spec.association.type == AssociationType::SharedRandomEffects)
              ? prop.dot(st_.alpha)
              : 0.0;
      const double cmu = m.assoc_mu_coef(i, st_.alpha);
      const double cmud = m.assoc_mud_coef(st_.alpha);

      Eigen::ArrayXd lh = bs_q_.segment(oq, m.nq).array() + eta_w_[i] + shared;
      if (cmu != 0.0) lh += cmu * (xb_q_.segment(oq, m.nq).array() + zb_q_p.array());
      if (cmud != 0.0) {
        lh += cmud * xdb_q_.segment(oq, m.nq).array();
        if (m.dform_random) lh += cmud * zdb_q_p.array();
      }
      const double H = (m.qw.segment(oq, m.nq).array() * lh.exp()).sum();
      double lh_e = bs_e_[i] + eta_w_[i] + shared + cmu * (xb_e_[i] + zb_e_p) +
                    cmud * (xdb_e_[i] + zdb_e_p);
      ll_surv_p = (m.delta[i] ? lh_e : 0.0) - H;
      delta_ll += ll_surv_p - ll_surv_[i];
    }

    if (std::isfinite(delta_ll) && std::log(rng.uniform() + 1e-300) < delta_ll) {
      st_.b.row(i) = prop.transpose();
      zb_obs_.segment(o, c) = zb_obs_p;
      ll_long_[i] = ll_long_p;
      if (m.has_surv) {
        zb_q_.segment(i * m.nq, m.nq) = zb_q_p;
        zb_e_[i] = zb_e_p;
        if (m.has_slope && m.dform_random) {
          zdb_q_.segment(i * m.nq, m.nq) = zdb_q_p;
          zdb_e_[i] = zdb_e_p;
        }
        ll_surv_[i] = ll_surv_p;
      }
      ++c_b_[i].accept;
      ++c_b_[i].batch_accept;
    }
  });
}

void McmcEngine::gibbs_sigma2() {
  const auto& m = m_;
  const double sse = (m.y - xb_obs_ - zb_obs_).squaredNorm();
  const double shape = m.spec.priors.sigma2_shape + 0.5 * m.n_obs;
  const double rate = m.spec.priors.sigma2_rate + 0.5 * sse;
  st_.sigma2 = rate / rng_.gamma(shape);
  // Longitudinal log-likelihood depends on sigma2; refresh per-subject terms.
  for (int i = 0; i < m.N; ++i) ll_long_[i] = subject_long_ll(i, xb_obs_, zb_obs_);
}

void McmcEngine::gibbs_D() {
  const auto& m = m_;
  if (m.q == 0) return;
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(m.q, m.q);
  S.noalias() += st_.b.transpose() * st_.b;
  const double nu = m.q + m.spec.priors.wishart_extra_df + m.N;

  // Wishart(nu, S^-1) via Bartlett, then invert to get D.
  Eigen::LLT<Eigen::MatrixXd> lltS(S.inverse());
  Eigen::MatrixXd L = lltS.matrixL();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m.q, m.q);
  for (int i = 0; i < m.q; ++i) {
    A(i, i) = std::sqrt(rng_.chi_squared(nu - i));
    for (int j = 0; j < i; ++j) A(i, j) = rng_.normal();
  }
  const Eigen::MatrixXd LA = L * A;
  const Eigen::MatrixXd W = LA * LA.transpose();
  Eigen::LLT<Eigen::MatrixXd> lltW(W);
  st_.D = lltW.solve(Eigen::MatrixXd::Identity(m.q, m.q));
  Dinv_ = W;
  logdetD_ = 0.0;
  for (int i = 0; i < m.q; ++i) logdetD_ -= 2.0 * std::log(lltW.matrixL()(i, i));
}

void McmcEngine::gibbs_taubs() {
  const auto& m = m_;
  if (!m.has_surv) return;
  const double quad = st_.theta_bs.dot(m.penalty * st_.theta_bs);
  const double shape = m.spec.priors.taubs_shape + 0.5 * (m.K - 2);
  const double rate = m.spec.priors.taubs_rate + 0.5 * quad;
  st_.taubs = rng_.gamma(shape, rate);
}

void McmcEngine::adapt(int iter) {
  if (iter >= cfg_.adapt) return;
  if ((iter + 1) % 50 != 0) return;
  const double step = std::min(0.05, 1.0 / std::sqrt(1.0 + iter / 50.0));
  auto tune = [&](Counter& c, double& ls, double target) {
    if (c.batch_attempt == 0) return;
    const double rate = static_cast<double>(c.batch_accept) / c.batch_attempt;
    ls += (rate > target) ? step : -step;
    c.batch_accept = c.batch_attempt = 0;
  };
  tune(c_beta_, ls_beta_, m_.p == 1 ? 0.44 : 0.25);
  tune(c_ga_, ls_ga_, 0.25);

  // Switch to covariance-shaped proposals once enough states are banked;
  // the log-scale restarts at the standard optimal factor on the switch.
  if (m_.has_surv) {
    const bool was = surv_cov_.ready();
    if (surv_cov_.refresh() && !was) {
      ls_ga_ = std::log(2.38 / std::sqrt(static_cast<double>(m_.pw + m_.na + m_.K)));
    }
  }
  for (int i = 0; i < m_.N; ++i) {
    tune(c_b_[i], ls_b_[i], m_.q == 1 ? 0.44 : 0.25);
  }
}

PosteriorChains McmcEngine::run() {
  initialize();
  const auto& m = m_;

  PosteriorChains out;
  out.config = cfg_;
  out.labels = model_.parameter_labels();
  out.q = m.q;

  out.beta_offset = 0;
  out.n_beta = m.p;
  out.sigma2_index = m.p;
  out.d_offset = m.p + 1;
  out.n_d = m.q * (m.q + 1) / 2;
  out.gamma_offset = out.d_offset + out.n_d;
  out.n_gamma = m.pw;
  out.alpha_offset = out.gamma_offset + m.pw;
  out.n_alpha = m.na;
  out.bs_offset = out.alpha_offset + m.na;
  out.n_bs = m.K;
  out.taubs_index = m.has_surv ? out.bs_offset + m.K : -1;
  const int n_params = out.bs_offset + m.K + (m.has_surv ? 1 : 0);

  const int n_draws = cfg_.n_draws();
  if (n_draws <= 0) throw ValidationError("MCMC config yields no retained draws");
  out.draws.resize(n_draws, n_params);
  if (cfg_.store_random_effects && m.q > 0) out.b_draws.reserve(n_draws);

  int stored = 0;
  for (int iter = 0; iter < cfg_.n_iter; ++iter) {
    update_beta(iter);
    gibbs_sigma2();
    update_b(iter);
    gibbs_D();
    // Several sub-updates of the survival block per sweep: it only touches
    // the survival likelihood, so extra repeats are cheap and they offset the
    // slow conditional mixing of the association parameters given b.
    for (int r = 0; r < 5; ++r) update_surv_params(iter);
    gibbs_taubs();
    // Survival likelihood is stale after the D/sigma2 draws only through
    // values it does not depend on; nothing to refresh here.
    adapt(iter);

    if (iter >= cfg_.burnin && (iter - cfg_.burnin) % cfg_.thin == 0 && stored < n_draws) {
      Eigen::RowVectorXd row(n_params);
      int k = 0;
      for (int j = 0; j < m.p; ++j) row[k++] = st_.beta[j];
      row[k++] = st_.sigma2;
      for (int i = 0; i < m.q; ++i) {
        for (int j = 0; j <= i; ++j) row[k++] = st_.D(i, j);
      }
      for (int j = 0; j < m.pw; ++j) row[k++] = st_.gamma[j];
      for (int j = 0; j < m.na; ++j) row[k++] = st_.alpha[j];
      for (int j = 0; j < m.K; ++j) row[k++] = st_.theta_bs[j];
      if (m.has_surv) row[k++] = st_.taubs;
      out.draws.row(stored) = row;
      if (cfg_.store_random_effects && m.q > 0) out.b_draws.push_back(st_.b);
      ++stored;
    }
  }

  out.acceptance["beta"] = c_beta_.rate();
  if (m.has_surv) {
    out.acceptance["survival_params"] = c_ga_.rate();
  }
  if (m.q > 0) {
    double mean_rate = 0.0;
    for (const auto& c : c_b_) mean_rate += c.rate();
    out.acceptance["random_effects"] = mean_rate / m.N;
  }
  for (const auto& [name, rate] : out.acceptance) {
    if (rate < 0.01) {
      out.warnings.push_back("block '" + name + "' acceptance rate " +
                             format_double(rate) + " after adaptation");
    }
  }
  return out;
}

}  // namespace

PosteriorChains JointModel::run_mcmc(const McmcConfig& config) const {
  McmcEngine engine(*impl_, *this, config);
  return engine.run();
}

JointParameters PosteriorChains::unpack(int draw) const {
  JointParameters p;
  p.beta = draws.row(draw).segment(beta_offset, n_beta).transpose();
  p.sigma2 = draws(draw, sigma2_index);
  p.D.resize(q, q);
  int k = d_offset;
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j <= i; ++j) {
      p.D(i, j) = p.D(j, i) = draws(draw, k++);
    }
  }
  p.gamma = draws.row(draw).segment(gamma_offset, n_gamma).transpose();
  p.alpha = draws.row(draw).segment(alpha_offset, n_alpha).transpose();
  p.theta_bs = draws.row(draw).segment(bs_offset, n_bs).transpose();
  p.taubs = (taubs_index >= 0) ? draws(draw, taubs_index) : 1.0;
  if (draw < static_cast<int>(b_draws.size())) p.b = b_draws[draw];
  return p;
}

std::vector<SummaryRow> summarize(const PosteriorChains& chains) {
  if (chains.n_draws() == 0) throw ValidationError("empty chains");
  std::vector<SummaryRow> rows;
  for (int j = 0; j < chains.draws.cols(); ++j) {
    const Eigen::VectorXd col = chains.draws.col(j);
    rows.push_back({chains.labels[j], col.mean(), quantile(col, 0.025), quantile(col, 0.975)});
  }
  return rows;
}

}  // namespace jointfit
