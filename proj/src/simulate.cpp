#include "jointfit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "jointfit/design.hpp"
#include "jointfit/errors.hpp"
#include "jointfit/formula.hpp"
#include "jointfit/parallel.hpp"
#include "jointfit/quadrature.hpp"
#include "jointfit/rng.hpp"
#include "jointfit/spline.hpp"

namespace jointfit {

namespace {

using nlohmann::json;

CovariateSpec::Kind covariate_kind(const std::string& s) {
  if (s == "bernoulli") return CovariateSpec::Kind::Bernoulli;
  if (s == "normal") return CovariateSpec::Kind::Normal;
  if (s == "uniform") return CovariateSpec::Kind::Uniform;
  throw SchemaError("unknown covariate kind '" + s + "'");
}

std::string covariate_kind_name(CovariateSpec::Kind k) {
  switch (k) {
    case CovariateSpec::Kind::Bernoulli: return "bernoulli";
    case CovariateSpec::Kind::Normal: return "normal";
    case CovariateSpec::Kind::Uniform: return "uniform";
  }
  return "";
}

AssociationStructure association_from_string(const std::string& s) {
  AssociationStructure a;
  if (s == "value") {
    a.type = AssociationType::CurrentValue;
  } else if (s == "value-slope") {
    a.type = AssociationType::CurrentValueSlope;
  } else if (s == "shared-re") {
    a.type = AssociationType::SharedRandomEffects;
  } else {
    throw SchemaError("unknown association '" + s + "'");
  }
  return a;
}

std::string association_to_string(AssociationType t) {
  switch (t) {
    case AssociationType::CurrentValue: return "value";
    case AssociationType::CurrentValueSlope: return "value-slope";
    case AssociationType::SharedRandomEffects: return "shared-re";
  }
  return "";
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) return {};
  const auto cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw SchemaError("ragged matrix in JSON");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

}  // namespace

Generator generator_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid generator JSON: ") + e.what());
  }
  try {
    Generator g;
    g.n_subjects = j.at("n_subjects").get<int>();
    g.seed = j.value("seed", std::uint64_t{1});
    for (const auto& t : j.at("visit_times")) g.visit_times.push_back(t.get<double>());
    g.visit_jitter = j.value("visit_jitter", 0.1);
    g.censor_time = j.at("censor_time").get<double>();
    if (j.contains("covariates")) {
      for (const auto& c : j["covariates"]) {
        CovariateSpec spec;
        spec.name = c.at("name").get<std::string>();
        spec.kind = covariate_kind(c.at("kind").get<std::string>());
        switch (spec.kind) {
          case CovariateSpec::Kind::Bernoulli:
            spec.a = c.value("p", 0.5);
            break;
          case CovariateSpec::Kind::Normal:
            spec.a = c.value("mean", 0.0);
            spec.b = c.value("sd", 1.0);
            break;
          case CovariateSpec::Kind::Uniform:
            spec.a = c.value("lo", 0.0);
            spec.b = c.value("hi", 1.0);
            break;
        }
        g.covariates.push_back(spec);
      }
    }
    g.fixed = j.at("fixed").get<std::string>();
    g.random = j.at("random").get<std::string>();
    if (j.contains("survival_covariates")) {
      for (const auto& s : j["survival_covariates"]) {
        g.survival_covariates.push_back(s.get<std::string>());
      }
    }
    g.time_var = j.value("time_var", std::string("time"));
    g.beta = vector_from_json(j.at("beta"));
    g.sigma2 = j.at("sigma2").get<double>();
    g.D = matrix_from_json(j.at("D"));
    g.gamma = j.contains("gamma") ? vector_from_json(j["gamma"]) : Eigen::VectorXd{};
    g.alpha = vector_from_json(j.at("alpha"));
    g.association = association_from_string(j.value("association", std::string("value")));
    if (j.contains("transform_covariate")) {
      g.association.transform = TransformFunction{j["transform_covariate"].get<std::string>()};
    }
    if (j.contains("baseline")) {
      const auto& b = j["baseline"];
      const std::string kind = b.value("kind", std::string("constant"));
      if (kind == "constant") {
        g.baseline.kind = BaselineHazardSpec::Kind::Constant;
        g.baseline.rate = b.value("rate", 0.1);
      } else if (kind == "weibull") {
        g.baseline.kind = BaselineHazardSpec::Kind::Weibull;
        g.baseline.shape = b.at("shape").get<double>();
        g.baseline.scale = b.at("scale").get<double>();
      } else if (kind == "log-spline") {
        g.baseline.kind = BaselineHazardSpec::Kind::LogSpline;
        for (const auto& c : b.at("coefs")) g.baseline.coefs.push_back(c.get<double>());
      } else {
        throw SchemaError("unknown baseline kind '" + kind + "'");
      }
    }
    return g;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("generator JSON: ") + e.what());
  }
}

std::string generator_to_json(const Generator& g) {
  json j;
  j["n_subjects"] = g.n_subjects;
  j["seed"] = g.seed;
  j["visit_times"] = g.visit_times;
  j["visit_jitter"] = g.visit_jitter;
  j["censor_time"] = g.censor_time;
  j["covariates"] = json::array();
  for (const auto& c : g.covariates) {
    json cc{{"name", c.name}, {"kind", covariate_kind_name(c.kind)}};
    switch (c.kind) {
      case CovariateSpec::Kind::Bernoulli:
        cc["p"] = c.a;
        break;
      case CovariateSpec::Kind::Normal:
        cc["mean"] = c.a;
        cc["sd"] = c.b;
        break;
      case CovariateSpec::Kind::Uniform:
        cc["lo"] = c.a;
        cc["hi"] = c.b;
        break;
    }
    j["covariates"].push_back(cc);
  }
  j["fixed"] = g.fixed;
  j["random"] = g.random;
  j["survival_covariates"] = g.survival_covariates;
  j["time_var"] = g.time_var;
  j["beta"] = std::vector<double>(g.beta.data(), g.beta.data() + g.beta.size());
  j["sigma2"] = g.sigma2;
  j["D"] = json::array();
  for (Eigen::Index i = 0; i < g.D.rows(); ++i) {
    j["D"].push_back(std::vector<double>(g.D.row(i).begin(), g.D.row(i).end()));
  }
  j["gamma"] = std::vector<double>(g.gamma.data(), g.gamma.data() + g.gamma.size());
  j["alpha"] = std::vector<double>(g.alpha.data(), g.alpha.data() + g.alpha.size());
  j["association"] = association_to_string(g.association.type);
  if (g.association.transform) {
    j["transform_covariate"] = g.association.transform->interacting_covariate;
  }
  switch (g.baseline.kind) {
    case BaselineHazardSpec::Kind::Constant:
      j["baseline"] = {{"kind", "constant"}, {"rate", g.baseline.rate}};
      break;
    case BaselineHazardSpec::Kind::Weibull:
      j["baseline"] = {{"kind", "weibull"}, {"shape", g.baseline.shape},
                       {"scale", g.baseline.scale}};
      break;
    case BaselineHazardSpec::Kind::LogSpline:
      j["baseline"] = {{"kind", "log-spline"}, {"coefs", g.baseline.coefs}};
      break;
  }
  return j.dump(2);
}

namespace {

struct SubjectSim {
  std::map<std::string, double> covariates;
  Eigen::VectorXd b;
  double true_event = std::numeric_limits<double>::infinity();
  bool event = false;
  std::vector<double> visit_times;
  std::vector<double> responses;
};

class Simulator {
 public:
  explicit Simulator(const Generator& gen) : g_(gen) { validate(); }

  SimulationResult run();

 private:
  const Generator& g_;
  ModelFormula fixed_formula_, random_formula_;
  DesignBuilder fixed_builder_{ModelFormula{}};
  DesignBuilder random_builder_{ModelFormula{}};
  std::optional<DerivativeForm> dfix_, dran_;
  std::optional<BSplineBasis> log_spline_;
  int q_ = 0;

  void validate();
  void fit_builders(const std::vector<SubjectSim>& subjects);
  Table make_table(const SubjectSim& s, const Eigen::VectorXd& times) const;
  Eigen::VectorXd hazard_at(const SubjectSim& s, const Eigen::VectorXd& times) const;
  double baseline_log_hazard(double t) const;
  void simulate_event(SubjectSim& s, Rng& rng) const;
  void simulate_visits(SubjectSim& s, Rng& rng) const;
};

void Simulator::validate() {
  if (g_.n_subjects < 1) throw ValidationError("n_subjects must be >= 1");
  if (g_.visit_times.empty()) throw ValidationError("visit_times must be non-empty");
  if (!std::is_sorted(g_.visit_times.begin(), g_.visit_times.end())) {
    throw ValidationError("visit_times must be increasing");
  }
  if (g_.censor_time <= g_.visit_times.front()) {
    throw ValidationError("censor_time must exceed the first visit time");
  }
  if (g_.D.rows() != g_.D.cols()) throw ValidationError("D must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(g_.D);
  if (g_.D.rows() > 0 && llt.info() != Eigen::Success) {
    throw ValidationError("D must be positive definite");
  }
  fixed_formula_ = parse_formula(g_.fixed);
  random_formula_ = parse_formula(g_.random);
  if (fixed_formula_.response.empty()) {
    throw ValidationError("fixed formula needs a response name");
  }
  const int na_expected = [&] {
    switch (g_.association.type) {
      case AssociationType::CurrentValue:
        return g_.association.transform ? 2 : 1;
      case AssociationType::CurrentValueSlope:
        return 2;
      case AssociationType::SharedRandomEffects:
        return static_cast<int>(g_.D.rows());
    }
    return 0;
  }();
  if (static_cast<int>(g_.alpha.size()) != na_expected) {
    throw ValidationError("alpha has " + std::to_string(g_.alpha.size()) +
                          " entries, association needs " + std::to_string(na_expected));
  }
  if (static_cast<int>(g_.gamma.size()) != static_cast<int>(g_.survival_covariates.size())) {
    throw ValidationError("gamma length must match survival_covariates");
  }
  auto has_cov = [&](const std::string& name) {
    return std::any_of(g_.covariates.begin(), g_.covariates.end(),
                       [&](const CovariateSpec& c) { return c.name == name; });
  };
  for (const auto& name : g_.survival_covariates) {
    if (!has_cov(name)) throw ValidationError("survival covariate '" + name + "' not generated");
  }
  if (g_.association.transform && !has_cov(g_.association.transform->interacting_covariate)) {
    throw ValidationError("transform covariate not generated");
  }
  if (g_.baseline.kind == BaselineHazardSpec::Kind::LogSpline) {
    const int k = static_cast<int>(g_.baseline.coefs.size());
    if (k < 4) throw ValidationError("log-spline baseline needs >= 4 coefficients");
    std::vector<double> interior;
    for (int i = 1; i <= k - 4; ++i) interior.push_back(g_.censor_time * i / (k - 3));
    log_spline_.emplace(0.0, g_.censor_time, interior);
  }
}

void Simulator::fit_builders(const std::vector<SubjectSim>& subjects) {
  // Fit on the scheduled grid for every subject so spline knots are frozen
  // before any design evaluation.
  const int ng = static_cast<int>(g_.visit_times.size());
  Table t;
  Eigen::VectorXd times(g_.n_subjects * ng);
  std::map<std::string, Eigen::VectorXd> cols;
  for (const auto& c : g_.covariates) cols[c.name] = Eigen::VectorXd(g_.n_subjects * ng);
  for (int i = 0; i < g_.n_subjects; ++i) {
    for (int k = 0; k < ng; ++k) {
      const int row = i * ng + k;
      t.ids.push_back(std::to_string(i + 1));
      times[row] = g_.visit_times[k];
      for (const auto& c : g_.covariates) cols[c.name][row] = subjects[i].covariates.at(c.name);
    }
  }
  t.add(g_.time_var, times);
  for (auto& [name, v] : cols) t.add(name, std::move(v));

  fixed_builder_ = DesignBuilder(fixed_formula_);
  random_builder_ = DesignBuilder(random_formula_);
  fixed_builder_.fit(t);
  random_builder_.fit(t);
  if (fixed_builder_.n_columns() != static_cast<int>(g_.beta.size())) {
    throw ValidationError("beta length does not match the fixed design");
  }
  q_ = random_builder_.n_columns();
  if (q_ != static_cast<int>(g_.D.rows())) {
    throw ValidationError("D dimension does not match the random design");
  }
  if (g_.association.type == AssociationType::CurrentValueSlope) {
    try {
      dfix_ = fixed_builder_.derivative(g_.time_var);
    } catch (const ValidationError&) {
    }
    try {
      dran_ = random_builder_.derivative(g_.time_var);
    } catch (const ValidationError&) {
    }
  }
}

Table Simulator::make_table(const SubjectSim& s, const Eigen::VectorXd& times) const {
  Table t;
  t.ids.assign(times.size(), "s");
  t.add(g_.time_var, times);
  for (const auto& [name, value] : s.covariates) {
    t.add(name, Eigen::VectorXd::Constant(times.size(), value));
  }
  return t;
}

double Simulator::baseline_log_hazard(double t) const {
  switch (g_.baseline.kind) {
    case BaselineHazardSpec::Kind::Constant:
      return std::log(g_.baseline.rate);
    case BaselineHazardSpec::Kind::Weibull: {
      const double z = t / g_.baseline.scale;
      return std::log(g_.baseline.shape / g_.baseline.scale) +
             (g_.baseline.shape - 1.0) * std::log(z);
    }
    case BaselineHazardSpec::Kind::LogSpline: {
      const Eigen::RowVectorXd basis = log_spline_->evaluate_one(t);
      return basis.dot(Eigen::Map<const Eigen::VectorXd>(g_.baseline.coefs.data(),
                                                         g_.baseline.coefs.size()));
    }
  }
  return 0.0;
}

Eigen::VectorXd Simulator::hazard_at(const SubjectSim& s, const Eigen::VectorXd& times) const {
  double eta = 0.0;
  for (std::size_t k = 0; k < g_.survival_covariates.size(); ++k) {
    eta += g_.gamma[static_cast<Eigen::Index>(k)] * s.covariates.at(g_.survival_covariates[k]);
  }

  Eigen::VectorXd lp = Eigen::VectorXd::Constant(times.size(), eta);
  for (Eigen::Index i = 0; i < times.size(); ++i) lp[i] += baseline_log_hazard(times[i]);

  if (g_.association.type == AssociationType::SharedRandomEffects) {
    lp.array() += g_.alpha.dot(s.b);
  } else {
    const Table tab = make_table(s, times);
    Eigen::VectorXd mu = fixed_builder_.build(tab).values * g_.beta;
    if (q_ > 0) mu.noalias() += random_builder_.build(tab).values * s.b;
    double cmu = g_.alpha[0];
    if (g_.association.type == AssociationType::CurrentValue && g_.association.transform) {
      cmu += g_.alpha[1] * s.covariates.at(g_.association.transform->interacting_covariate);
    }
    lp.noalias() += cmu * mu;
    if (g_.association.type == AssociationType::CurrentValueSlope) {
      Eigen::VectorXd mud = Eigen::VectorXd::Zero(times.size());
      if (dfix_) {
        Eigen::VectorXd bsub(dfix_->coef_indices.size());
        for (std::size_t k = 0; k < dfix_->coef_indices.size(); ++k) {
          bsub[k] = g_.beta[dfix_->coef_indices[k]];
        }
        mud.noalias() += fixed_builder_.build_derivative(*dfix_, tab).values * bsub;
      }
      if (dran_) {
        Eigen::VectorXd bsub(dran_->coef_indices.size());
        for (std::size_t k = 0; k < dran_->coef_indices.size(); ++k) {
          bsub[k] = s.b[dran_->coef_indices[k]];
        }
        mud.noalias() += random_builder_.build_derivative(*dran_, tab).values * bsub;
      }
      lp.noalias() += g_.alpha[1] * mud;
    }
  }
  return lp.array().exp();
}

void Simulator::simulate_event(SubjectSim& s, Rng& rng) const {
  const double target = -std::log(1.0 - rng.uniform());  // Exp(1) deviate

  // Scan cumulative hazard over segments of the bracket; expand once.
  double bracket = 10.0 * g_.censor_time;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int S = 80;
    Eigen::VectorXd nodes, weights;
    quadrature_grid(bracket, S, nodes, weights);
    const Eigen::VectorXd h = hazard_at(s, nodes);
    if (!h.allFinite()) {
      throw NumericError("non-finite hazard while simulating a subject (bracket " +
                         format_double(bracket) + ")");
    }
    double cum = 0.0;
    for (int k = 0; k < S; ++k) {
      const double seg =
          weights.segment(k * 15, 15).dot(h.segment(k * 15, 15));
      if (cum + seg >= target) {
        // Bisection inside [lo, hi] on H(lo) + integral(lo, t) = target.
        const double seg_lo = bracket * k / S;
        double lo = seg_lo;
        double hi = bracket * (k + 1) / S;
        const double base = cum;
        auto H = [&, seg_lo, base](double t) {
          if (t <= seg_lo) return base;
          Eigen::VectorXd n2, w2;
          quadrature_grid(t - seg_lo, 1, n2, w2);
          n2.array() += seg_lo;
          return base + w2.dot(hazard_at(s, n2));
        };
        for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
          const double mid = 0.5 * (lo + hi);
          (H(mid) < target ? lo : hi) = mid;
        }
        s.true_event = 0.5 * (lo + hi);
        s.event = s.true_event <= g_.censor_time;
        return;
      }
      cum += seg;
    }
    bracket *= 10.0;  // one expansion, then give up (event effectively never)
  }
  s.true_event = std::numeric_limits<double>::infinity();
  s.event = false;
}

void Simulator::simulate_visits(SubjectSim& s, Rng& rng) const {
  const double t_obs = std::min(s.true_event, g_.censor_time);
  const int ng = static_cast<int>(g_.visit_times.size());
  for (int k = 0; k < ng; ++k) {
    const double spacing = (ng > 1)
                               ? (k > 0 ? g_.visit_times[k] - g_.visit_times[k - 1]
                                        : g_.visit_times[1] - g_.visit_times[0])
                               : 1.0;
    double t = g_.visit_times[k] + g_.visit_jitter * spacing * rng.uniform(-1.0, 1.0);
    t = std::max(t, 0.0);
    if (t <= t_obs) s.visit_times.push_back(t);
  }
  std::sort(s.visit_times.begin(), s.visit_times.end());
  if (s.visit_times.empty()) s.visit_times.push_back(0.0);

  const Eigen::VectorXd times = Eigen::Map<const Eigen::VectorXd>(
      s.visit_times.data(), static_cast<Eigen::Index>(s.visit_times.size()));
  const Table tab = make_table(s, times);
  Eigen::VectorXd mu = fixed_builder_.build(tab).values * g_.beta;
  if (q_ > 0) mu.noalias() += random_builder_.build(tab).values * s.b;
  const double sd = std::sqrt(g_.sigma2);
  s.responses.resize(s.visit_times.size());
  for (std::size_t k = 0; k < s.visit_times.size(); ++k) {
    s.responses[k] = mu[static_cast<Eigen::Index>(k)] + sd * rng.normal();
  }
}

SimulationResult Simulator::run() {
  std::vector<SubjectSim> subjects(g_.n_subjects);

  // Pass 1: covariates and random effects (serial streams, order-free).
  Eigen::MatrixXd Lchol;
  if (g_.D.rows() > 0) Lchol = Eigen::LLT<Eigen::MatrixXd>(g_.D).matrixL();
  for (int i = 0; i < g_.n_subjects; ++i) {
    Rng rng = Rng::derive(g_.seed, i + 1, 0);
    for (const auto& c : g_.covariates) {
      double v = 0.0;
      switch (c.kind) {
        case CovariateSpec::Kind::Bernoulli: v = rng.bernoulli(c.a) ? 1.0 : 0.0; break;
        case CovariateSpec::Kind::Normal: v = rng.normal(c.a, c.b); break;
        case CovariateSpec::Kind::Uniform: v = rng.uniform(c.a, c.b); break;
      }
      subjects[i].covariates[c.name] = v;
    }
    Eigen::VectorXd z(g_.D.rows());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    subjects[i].b = (g_.D.rows() > 0) ? (Lchol * z).eval() : Eigen::VectorXd{};
  }

  fit_builders(subjects);

  // Pass 2: event times and visits, independent per subject.
  parallel_for(static_cast<std::size_t>(g_.n_subjects), [&](std::size_t i) {
    Rng rng = Rng::derive(g_.seed, i + 1, 1);
    simulate_event(subjects[i], rng);
    simulate_visits(subjects[i], rng);
  });

  // Assemble in subject order.
  SimulationResult out;
  LongitudinalData ld;
  SurvivalData sd;
  ld.schema.time = g_.time_var;
  ld.schema.response = fixed_formula_.response;
  for (const auto& c : g_.covariates) {
    ld.covariate_names.push_back(c.name);
    sd.covariate_names.push_back(c.name);
  }
  const int width = static_cast<int>(std::to_string(g_.n_subjects).size());
  auto subject_id = [&](int i) {
    std::string n = std::to_string(i + 1);
    return "s" + std::string(width - static_cast<int>(n.size()), '0') + n;
  };
  for (int i = 0; i < g_.n_subjects; ++i) {
    const auto& s = subjects[i];
    SurvivalRecord sr;
    sr.subject_id = subject_id(i);
    sr.event_time = std::min(s.true_event, g_.censor_time);
    sr.event = s.event;
    sr.baseline_covariates = s.covariates;
    sd.records.push_back(sr);
    for (std::size_t k = 0; k < s.visit_times.size(); ++k) {
      LongitudinalRecord lr;
      lr.subject_id = sr.subject_id;
      lr.time = s.visit_times[k];
      lr.response = s.responses[k];
      lr.covariates = s.covariates;
      ld.records.push_back(lr);
    }
  }
  out.data = join_datasets(std::move(ld), std::move(sd));

  out.truth.b.resize(g_.n_subjects, g_.D.rows());
  out.truth.true_event_time.resize(g_.n_subjects);
  out.truth.observed_event.resize(g_.n_subjects);
  for (int i = 0; i < g_.n_subjects; ++i) {
    if (g_.D.rows() > 0) out.truth.b.row(i) = subjects[i].b.transpose();
    out.truth.true_event_time[i] = subjects[i].true_event;
    out.truth.observed_event[i] = subjects[i].event;
  }
  return out;
}

}  // namespace

SimulationResult simulate_joint(const Generator& gen) {
  Simulator sim(gen);
  return sim.run();
}

}  // namespace jointfit
