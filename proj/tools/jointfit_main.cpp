// jointfit command-line front end.
//
// Subcommands: fit-lmm, fit-cox, km, zph, fit-joint, compare, simulate,
// diagnose. Every run that writes to a directory also records a run.json
// with the seed, a config hash and timings.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jointfit/data.hpp"
#include "jointfit/diagnostics.hpp"
#include "jointfit/errors.hpp"
#include "jointfit/formula.hpp"
#include "jointfit/jointmodel.hpp"
#include "jointfit/lmm.hpp"
#include "jointfit/parallel.hpp"
#include "jointfit/simulate.hpp"
#include "jointfit/stats.hpp"
#include "jointfit/survival.hpp"
#include "jointfit/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jointfit;

namespace {

constexpr const char* kVersion = "jointfit 0.1.0";

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

// Either a directory of artifacts or stdout ("--out -").
struct OutputSink {
  bool to_stdout = false;
  fs::path dir;

  void write(const std::string& name, const std::string& content) const {
    if (to_stdout) return;  // only the primary table goes to stdout
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir / name).string());
    out << content;
  }

  void primary(const std::string& content) const {
    if (to_stdout) {
      std::cout << content;
    }
  }
};

OutputSink open_output(const std::string& out, bool force) {
  OutputSink sink;
  if (out == "-") {
    sink.to_stdout = true;
    return sink;
  }
  sink.dir = out;
  if (fs::exists(sink.dir)) {
    if (!fs::is_directory(sink.dir)) {
      throw ValidationError("output path exists and is not a directory: " + out);
    }
    if (!fs::is_empty(sink.dir) && !force) {
      throw ValidationError("output directory not empty (use --force): " + out);
    }
  } else {
    fs::create_directories(sink.dir);
  }
  return sink;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_run_json(const OutputSink& sink, const std::string& command, const json& config,
                    std::uint64_t seed, double wall_seconds) {
  json run;
  run["version"] = kVersion;
  run["command"] = command;
  run["seed"] = seed;
  run["config"] = config;
  run["config_hash"] = hex64(fnv1a(config.dump()));
  run["wall_seconds"] = wall_seconds;
  run["timestamp"] = static_cast<long long>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  sink.write("run.json", run.dump(2) + "\n");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared input options
// ---------------------------------------------------------------------------

struct LongInput {
  std::string path;
  LongSchema schema;

  LongitudinalData load() const {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read file: " + path);
    return parse_longitudinal_csv(in, schema);
  }
};

struct SurvInput {
  std::string path;
  SurvSchema schema;

  SurvivalData load() const {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read file: " + path);
    return parse_survival_csv(in, schema);
  }
};

void add_long_options(CLI::App* cmd, LongInput& li, bool required = true) {
  auto* opt = cmd->add_option("--long", li.path, "longitudinal CSV file");
  if (required) opt->required();
  cmd->add_option("--long-id", li.schema.id, "id column name (default id)");
  cmd->add_option("--long-time", li.schema.time, "time column name (default time)");
  cmd->add_option("--long-y", li.schema.response, "response column name (default y)");
}

void add_surv_options(CLI::App* cmd, SurvInput& si, bool required = true) {
  auto* opt = cmd->add_option("--surv", si.path, "survival CSV file");
  if (required) opt->required();
  cmd->add_option("--surv-id", si.schema.id, "id column name (default id)");
  cmd->add_option("--surv-time", si.schema.time, "time column name (default time)");
  cmd->add_option("--surv-status", si.schema.status, "status column name (default status)");
}

// ---------------------------------------------------------------------------
// Table formatting
// ---------------------------------------------------------------------------

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) w[j] = header[j].size();
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], r[j].size());
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      os << (j ? "  " : "");
      os << r[j] << std::string(w[j] - r[j].size(), ' ');
    }
    os << "\n";
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return os.str();
}

std::string fmt(double v) { return format_double(v); }

std::string fmt3(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// fit-lmm
// ---------------------------------------------------------------------------

int cmd_fit_lmm(const LongInput& li, const std::string& fixed, const std::string& random,
                const std::string& method_name, const OutputSink& sink, const json& config) {
  const auto start = std::chrono::steady_clock::now();
  FitMethod method;
  if (method_name == "ml") {
    method = FitMethod::ML;
  } else if (method_name == "reml") {
    method = FitMethod::REML;
  } else {
    throw ValidationError("--method must be ml or reml");
  }

  LongitudinalData ld = li.load();
  SurvivalData dummy;  // subject universe from the longitudinal file
  for (const auto& r : ld.records) {
    if (dummy.records.empty() || dummy.records.back().subject_id != r.subject_id) {
      bool seen = false;
      for (const auto& s : dummy.records) seen = seen || s.subject_id == r.subject_id;
      if (!seen) dummy.records.push_back({r.subject_id, 1e300, false, {}});
    }
  }
  JointDataset data = join_datasets(std::move(ld), std::move(dummy));
  const Table table = longitudinal_table(data);

  const LmmFit fit =
      fit_lmm(parse_formula(fixed), parse_formula(random), table, method);
  const auto ic = information_criteria(fit);

  json out;
  out["method"] = method_name;
  out["loglik"] = fit.loglik;
  out["aic"] = ic.aic;
  out["bic"] = ic.bic;
  out["df"] = fit.df;
  out["n_obs"] = fit.n_obs;
  out["n_subjects"] = fit.n_subjects;
  out["sigma2"] = fit.sigma2;
  out["converged"] = fit.converged;
  out["boundary_warning"] = fit.boundary_warning;
  out["beta"] = json::object();
  for (std::size_t j = 0; j < fit.fixed_labels.size(); ++j) {
    out["beta"][fit.fixed_labels[j]] = fit.beta[static_cast<Eigen::Index>(j)];
  }
  out["D"] = json::array();
  for (Eigen::Index i = 0; i < fit.D.rows(); ++i) {
    out["D"].push_back(std::vector<double>(fit.D.row(i).begin(), fit.D.row(i).end()));
  }
  out["random_labels"] = fit.random_labels;

  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < fit.fixed_labels.size(); ++j) {
    rows.push_back({fit.fixed_labels[j], fmt(fit.beta[static_cast<Eigen::Index>(j)]),
                    fmt(std::sqrt(fit.vcov_beta(j, j)))});
  }
  const std::string table_text = render_table({"term", "estimate", "se"}, rows);

  sink.primary(table_text);
  sink.write("lmm.json", out.dump(2) + "\n");
  sink.write("lmm.txt", table_text);
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "fit-lmm", config, 0, wall);
  return 0;
}

// ---------------------------------------------------------------------------
// fit-cox / km / zph
// ---------------------------------------------------------------------------

int cmd_fit_cox(const SurvInput& si, const std::string& formula, const std::string& strata,
                const OutputSink& sink, const json& config) {
  const auto start = std::chrono::steady_clock::now();
  SurvivalData sd = si.load();
  std::optional<std::string> strata_opt;
  if (!strata.empty()) strata_opt = strata;
  const CoxFit fit = fit_cox(sd.records, parse_formula(formula), strata_opt);

  json out;
  out["partial_loglik"] = fit.partial_loglik;
  out["n_events"] = fit.n_events;
  out["iterations"] = fit.iterations;
  out["coef"] = json::object();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < fit.labels.size(); ++j) {
    const double g = fit.gamma[static_cast<Eigen::Index>(j)];
    const double se = fit.se[static_cast<Eigen::Index>(j)];
    const double z = g / se;
    const double p = 2.0 * (1.0 - normal_cdf(std::abs(z)));
    out["coef"][fit.labels[j]] = {{"estimate", g}, {"se", se}, {"z", z},
                                  {"p", p}, {"hazard_ratio", hazard_ratio(g)}};
    rows.push_back({fit.labels[j], fmt(g), fmt(se), fmt3(z), format_p_value(p),
                    fmt3(hazard_ratio(g))});
  }
  const std::string table_text =
      render_table({"term", "coef", "se", "z", "p", "HR"}, rows);

  // Baseline cumulative hazard per stratum.
  std::ostringstream base;
  base << "stratum,time,increment,cumhaz\n";
  for (std::size_t s = 0; s < fit.baseline.size(); ++s) {
    const std::string label = fit.strata_labels.empty() ? "" : fit.strata_labels[s];
    for (const auto& step : fit.baseline[s]) {
      base << label << "," << fmt(step.time) << "," << fmt(step.increment) << ","
           << fmt(step.cumhaz) << "\n";
    }
  }

  sink.primary(table_text);
  sink.write("cox.json", out.dump(2) + "\n");
  sink.write("cox.txt", table_text);
  sink.write("baseline.csv", base.str());
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "fit-cox", config, 0, wall);
  return 0;
}

int cmd_km(const SurvInput& si, const std::string& group, bool svg, const OutputSink& sink,
           const json& config) {
  const auto start = std::chrono::steady_clock::now();
  SurvivalData sd = si.load();
  std::optional<std::string> group_opt;
  if (!group.empty()) group_opt = group;
  const auto curves = kaplan_meier(sd.records, group_opt);

  std::ostringstream csv;
  csv << "group,time,survival,at_risk,events\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      csv << c.label << "," << fmt(c.times[i]) << "," << fmt(c.survival[i]) << ","
          << c.at_risk[i] << "," << c.events[i] << "\n";
    }
  }
  sink.primary(csv.str());
  sink.write("km.csv", csv.str());
  if (svg) {
    SvgPlot plot;
    plot.set_title("Kaplan-Meier");
    plot.set_labels("time", "survival");
    for (const auto& c : curves) {
      Eigen::VectorXd x(c.times.size() + 1), y(c.times.size() + 1);
      x[0] = 0.0;
      y[0] = 1.0;
      for (std::size_t i = 0; i < c.times.size(); ++i) {
        x[static_cast<Eigen::Index>(i) + 1] = c.times[i];
        y[static_cast<Eigen::Index>(i) + 1] = c.survival[i];
      }
      plot.add_line(x, y, c.label, /*step=*/true);
    }
    sink.write("km.svg", plot.render());
  }
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "km", config, 0, wall);
  return 0;
}

int cmd_zph(const SurvInput& si, const std::string& formula, const std::string& transform,
            const OutputSink& sink, const json& config) {
  const auto start = std::chrono::steady_clock::now();
  TimeTransform tt;
  if (transform == "identity") {
    tt = TimeTransform::Identity;
  } else if (transform == "rank") {
    tt = TimeTransform::Rank;
  } else if (transform == "km") {
    tt = TimeTransform::Km;
  } else {
    throw ValidationError("--transform must be identity, rank or km");
  }
  SurvivalData sd = si.load();
  const CoxFit fit = fit_cox(sd.records, parse_formula(formula));
  const SchoenfeldTest test = schoenfeld_test(fit, tt);

  json out;
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : test.per_covariate) {
    out["per_covariate"][r.label] = {{"rho", r.rho}, {"chisq", r.chisq}, {"p", r.p}};
    rows.push_back({r.label, fmt3(r.rho), fmt3(r.chisq), format_p_value(r.p)});
  }
  out["global"] = {{"chisq", test.global.chisq}, {"p", test.global.p}};
  rows.push_back({"GLOBAL", "-", fmt3(test.global.chisq), format_p_value(test.global.p)});
  const std::string table_text = render_table({"term", "rho", "chisq", "p"}, rows);

  sink.primary(table_text);
  sink.write("zph.json", out.dump(2) + "\n");
  sink.write("zph.txt", table_text);
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "zph", config, 0, wall);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& spec_path, const OutputSink& sink, const json& config,
                 std::optional<std::uint64_t> seed_override) {
  const auto start = std::chrono::steady_clock::now();
  Generator gen = generator_from_json(read_file(spec_path));
  if (seed_override) gen.seed = *seed_override;
  const SimulationResult sim = simulate_joint(gen);

  std::ostringstream lcsv, scsv;
  write_longitudinal_csv(lcsv, sim.data.longitudinal);
  write_survival_csv(scsv, sim.data.survival);

  json truth;
  truth["generator"] = json::parse(generator_to_json(gen));
  truth["true_event_time"] = json::array();
  truth["observed_event"] = json::array();
  truth["b"] = json::array();
  for (int i = 0; i < gen.n_subjects; ++i) {
    const double t = sim.truth.true_event_time[i];
    truth["true_event_time"].push_back(std::isfinite(t) ? json(t) : json(nullptr));
    truth["observed_event"].push_back(static_cast<bool>(sim.truth.observed_event[i]));
    truth["b"].push_back(std::vector<double>(sim.truth.b.row(i).begin(),
                                             sim.truth.b.row(i).end()));
  }

  sink.primary(scsv.str());
  sink.write("long.csv", lcsv.str());
  sink.write("surv.csv", scsv.str());
  sink.write("truth.json", truth.dump(2) + "\n");
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "simulate", config, gen.seed, wall);
  return 0;
}

// ---------------------------------------------------------------------------
// fit-joint
// ---------------------------------------------------------------------------

struct JointSpecJson {
  std::string fixed, random;
  std::string lmm_method = "reml";
  std::string survival_formula;
  AssociationStructure association;
  McmcConfig mcmc;
  int baseline_df = 9;
};

JointSpecJson parse_joint_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid model spec JSON: ") + e.what());
  }
  try {
    JointSpecJson spec;
    const auto& lng = j.at("longitudinal");
    spec.fixed = lng.at("fixed").get<std::string>();
    spec.random = lng.at("random").get<std::string>();
    spec.lmm_method = lng.value("method", std::string("reml"));
    spec.survival_formula = j.at("survival").at("formula").get<std::string>();
    const std::string assoc = j.value("association", std::string("value"));
    if (assoc == "value") {
      spec.association.type = AssociationType::CurrentValue;
    } else if (assoc == "value-slope") {
      spec.association.type = AssociationType::CurrentValueSlope;
    } else if (assoc == "shared-re") {
      spec.association.type = AssociationType::SharedRandomEffects;
    } else {
      throw SchemaError("unknown association '" + assoc + "'");
    }
    if (j.contains("transform")) {
      spec.association.transform =
          TransformFunction{j["transform"].at("covariate").get<std::string>()};
    }
    if (j.contains("mcmc")) {
      const auto& mc = j["mcmc"];
      spec.mcmc.n_iter = mc.value("iter", spec.mcmc.n_iter);
      spec.mcmc.adapt = mc.value("adapt", spec.mcmc.adapt);
      spec.mcmc.burnin = mc.value("burnin", spec.mcmc.burnin);
      spec.mcmc.thin = mc.value("thin", spec.mcmc.thin);
      spec.mcmc.seed = mc.value("seed", spec.mcmc.seed);
    }
    spec.baseline_df = j.value("baseline_df", 9);
    return spec;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model spec JSON: ") + e.what());
  }
}

std::string chains_csv(const PosteriorChains& chains) {
  std::ostringstream os;
  for (std::size_t j = 0; j < chains.labels.size(); ++j) {
    os << (j ? "," : "");
    if (chains.labels[j].find(',') != std::string::npos) {
      os << '"' << chains.labels[j] << '"';
    } else {
      os << chains.labels[j];
    }
  }
  os << "\n";
  for (int i = 0; i < chains.n_draws(); ++i) {
    for (Eigen::Index j = 0; j < chains.draws.cols(); ++j) {
      os << (j ? "," : "") << fmt(chains.draws(i, j));
    }
    os << "\n";
  }
  return os.str();
}

int cmd_fit_joint(const LongInput& li, const SurvInput& si, const std::string& spec_path,
                  const OutputSink& sink, json config, const McmcConfig* overrides,
                  const std::string& assoc_override, const std::string& transform_covariate,
                  bool svg) {
  const auto start = std::chrono::steady_clock::now();
  JointSpecJson spec = parse_joint_spec(read_file(spec_path));
  if (overrides) spec.mcmc = *overrides;
  if (!assoc_override.empty()) {
    if (assoc_override == "value") {
      spec.association.type = AssociationType::CurrentValue;
      spec.association.transform.reset();
    } else if (assoc_override == "value-slope") {
      spec.association.type = AssociationType::CurrentValueSlope;
      spec.association.transform.reset();
    } else if (assoc_override == "shared-re") {
      spec.association.type = AssociationType::SharedRandomEffects;
      spec.association.transform.reset();
    } else {
      throw ValidationError("--assoc must be value, value-slope or shared-re");
    }
  }
  if (!transform_covariate.empty()) {
    spec.association.transform = TransformFunction{transform_covariate};
  }
  config["resolved_mcmc"] = {{"iter", spec.mcmc.n_iter}, {"adapt", spec.mcmc.adapt},
                             {"burnin", spec.mcmc.burnin}, {"thin", spec.mcmc.thin},
                             {"seed", spec.mcmc.seed}};

  JointDataset data = join_datasets(li.load(), si.load());
  const Table table = longitudinal_table(data);

  JointModelSpec model_spec;
  model_spec.longitudinal =
      fit_lmm(parse_formula(spec.fixed), parse_formula(spec.random), table,
              spec.lmm_method == "ml" ? FitMethod::ML : FitMethod::REML);
  model_spec.survival = fit_cox(data.survival.records, parse_formula(spec.survival_formula));
  model_spec.association = spec.association;
  model_spec.baseline_df = spec.baseline_df;
  model_spec.time_var = data.longitudinal.schema.time;

  JointModel model(std::move(model_spec), data);
  const PosteriorChains chains = model.run_mcmc(spec.mcmc);
  const auto summary = summarize(chains);
  const FitQuality fq = dic_lpml(model, chains);

  json out;
  out["association"] = assoc_override.empty()
                           ? json::parse(read_file(spec_path)).value("association", "value")
                           : assoc_override;
  out["n_subjects"] = model.n_subjects();
  out["n_draws"] = chains.n_draws();
  out["dic"] = fq.dic;
  out["pd"] = fq.pd;
  out["lpml"] = fq.lpml;
  out["acceptance"] = chains.acceptance;
  out["warnings"] = chains.warnings;
  std::vector<std::vector<std::string>> rows;
  out["summary"] = json::array();
  for (const auto& r : summary) {
    out["summary"].push_back(
        {{"name", r.name}, {"mean", r.mean}, {"lo", r.lo}, {"hi", r.hi}});
    rows.push_back({r.name, fmt(r.mean), fmt(r.lo), fmt(r.hi)});
  }
  const std::string table_text = render_table({"parameter", "mean", "2.5%", "97.5%"}, rows);

  sink.primary(table_text);
  sink.write("summary.json", out.dump(2) + "\n");
  sink.write("summary.txt", table_text);
  sink.write("chains.csv", chains_csv(chains));
  if (svg) {
    for (Eigen::Index j = 0; j < chains.draws.cols(); ++j) {
      const Eigen::VectorXd col = chains.draws.col(j);
      std::string stem = chains.labels[j];
      for (auto& c : stem) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
      }
      SvgPlot trace;
      trace.set_title("trace: " + chains.labels[j]);
      trace.set_labels("draw", chains.labels[j]);
      Eigen::VectorXd idx =
          Eigen::VectorXd::LinSpaced(col.size(), 1.0, static_cast<double>(col.size()));
      trace.add_line(idx, col);
      sink.write("trace_" + stem + ".svg", trace.render());

      const int max_lag = std::min<int>(40, static_cast<int>(col.size()) - 1);
      const Eigen::VectorXd acf = autocorrelation(col, max_lag);
      SvgPlot acfp;
      acfp.set_title("ACF: " + chains.labels[j]);
      acfp.set_labels("lag", "acf");
      acfp.add_bars(Eigen::VectorXd::LinSpaced(acf.size(), 0.0, max_lag), acf);
      sink.write("acf_" + stem + ".svg", acfp.render());

      const Kde kde = kernel_density(col);
      SvgPlot kdep;
      kdep.set_title("density: " + chains.labels[j]);
      kdep.set_labels(chains.labels[j], "density");
      kdep.add_line(kde.grid, kde.density);
      sink.write("kde_" + stem + ".svg", kdep.render());
    }
  }
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "fit-joint", config, spec.mcmc.seed, wall);
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose / compare
// ---------------------------------------------------------------------------

PosteriorChains load_chains_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty chains file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  PosteriorChains chains;
  {
    // Header cells may be quoted when a label itself contains a comma.
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        chains.labels.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    chains.labels.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("chains row " + std::to_string(lineno) + ": bad number '" + cell +
                         "'");
      }
    }
    if (row.size() != chains.labels.size()) {
      throw SchemaError("chains row " + std::to_string(lineno) + ": expected " +
                        std::to_string(chains.labels.size()) + " cells");
    }
    rows.push_back(std::move(row));
  }
  chains.draws.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(chains.labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      chains.draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return chains;
}

int cmd_diagnose(const std::string& chains_path, bool svg, const OutputSink& sink,
                 const json& config) {
  const auto start = std::chrono::steady_clock::now();
  const PosteriorChains chains = load_chains_csv(chains_path);
  if (chains.n_draws() == 0) throw ValidationError("chains file has no draws");
  const auto rows = chain_diagnostics(chains);

  json out = json::array();
  std::vector<std::vector<std::string>> trows;
  for (const auto& r : rows) {
    out.push_back({{"name", r.name}, {"mean", r.mean}, {"sd", r.sd}, {"ess", r.ess}});
    trows.push_back({r.name, fmt(r.mean), fmt(r.sd), fmt3(r.ess)});
  }
  const std::string table_text = render_table({"parameter", "mean", "sd", "ess"}, trows);

  sink.primary(table_text);
  sink.write("diagnostics.json", out.dump(2) + "\n");
  sink.write("diagnostics.txt", table_text);
  if (svg) {
    for (std::size_t j = 0; j < chains.labels.size(); ++j) {
      const Eigen::VectorXd col = chains.draws.col(static_cast<Eigen::Index>(j));
      std::string stem = chains.labels[j];
      for (auto& c : stem) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
      }
      SvgPlot trace;
      trace.set_title("trace: " + chains.labels[j]);
      Eigen::VectorXd idx =
          Eigen::VectorXd::LinSpaced(col.size(), 1.0, static_cast<double>(col.size()));
      trace.add_line(idx, col);
      sink.write("trace_" + stem + ".svg", trace.render());
    }
  }
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "diagnose", config, 0, wall);
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const OutputSink& sink,
                const json& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<FitQuality> fits;
  std::vector<std::string> names;
  for (const auto& d : dirs) {
    const json j = json::parse(read_file((fs::path(d) / "summary.json").string()));
    FitQuality fq;
    fq.dic = j.at("dic").get<double>();
    fq.pd = j.at("pd").get<double>();
    fq.lpml = j.at("lpml").get<double>();
    fits.push_back(fq);
    names.push_back(fs::path(d).filename().string().empty()
                        ? d
                        : fs::path(d).filename().string());
  }
  const auto rows = compare_models(fits, names);

  json out = json::array();
  std::vector<std::vector<std::string>> trows;
  for (const auto& r : rows) {
    out.push_back({{"name", r.name}, {"dic", r.dic}, {"pd", r.pd}, {"lpml", r.lpml},
                   {"best_dic", r.best_dic}, {"best_lpml", r.best_lpml}});
    trows.push_back({r.name, fmt(r.dic), fmt(r.pd), fmt(r.lpml),
                     r.best_dic ? "*" : "", r.best_lpml ? "*" : ""});
  }
  const std::string table_text =
      render_table({"model", "DIC", "pD", "LPML", "bestDIC", "bestLPML"}, trows);

  sink.primary(table_text);
  sink.write("comparison.json", out.dump(2) + "\n");
  sink.write("comparison.txt", table_text);
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - start).count();
  write_run_json(sink, "compare", config, 0, wall);
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"jointfit: joint modeling of longitudinal and time-to-event data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  if (const char* env = std::getenv("JOINTFIT_THREADS")) {
    threads = std::atoi(env);
  }
  app.add_option("--threads", threads, "max worker threads (env JOINTFIT_THREADS)");

  std::string out_path = "-";
  bool force = false;
  bool svg = false;
  app.add_option("--out", out_path, "output directory, or - for stdout")
      ->capture_default_str();
  app.add_flag("--force", force, "allow writing into a non-empty directory");
  app.add_flag("--svg", svg, "also write SVG plots");

  // fit-lmm
  auto* lmm_cmd = app.add_subcommand("fit-lmm", "fit a linear mixed model");
  LongInput lmm_long;
  std::string lmm_fixed, lmm_random, lmm_method = "reml";
  add_long_options(lmm_cmd, lmm_long);
  lmm_cmd->add_option("--fixed", lmm_fixed, "fixed-effects formula")->required();
  lmm_cmd->add_option("--random", lmm_random, "random-effects formula")->required();
  lmm_cmd->add_option("--method", lmm_method, "ml or reml")->capture_default_str();

  // fit-cox
  auto* cox_cmd = app.add_subcommand("fit-cox", "fit a Cox proportional hazards model");
  SurvInput cox_surv;
  std::string cox_formula, cox_strata;
  add_surv_options(cox_cmd, cox_surv);
  cox_cmd->add_option("--formula", cox_formula, "covariate formula")->required();
  cox_cmd->add_option("--strata", cox_strata, "stratification covariate");

  // km
  auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier survivor curves");
  SurvInput km_surv;
  std::string km_group;
  add_surv_options(km_cmd, km_surv);
  km_cmd->add_option("--group", km_group, "grouping covariate");

  // zph
  auto* zph_cmd = app.add_subcommand("zph", "proportional-hazards test");
  SurvInput zph_surv;
  std::string zph_formula, zph_transform = "identity";
  add_surv_options(zph_cmd, zph_surv);
  zph_cmd->add_option("--formula", zph_formula, "covariate formula")->required();
  zph_cmd->add_option("--transform", zph_transform, "identity, rank or km")
      ->capture_default_str();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a joint dataset");
  std::string sim_spec;
  sim_cmd->add_option("--spec", sim_spec, "generator JSON file")->required();

  // fit-joint
  auto* joint_cmd = app.add_subcommand("fit-joint", "fit the Bayesian joint model");
  LongInput joint_long;
  SurvInput joint_surv;
  std::string joint_spec, joint_assoc, joint_transform_cov;
  add_long_options(joint_cmd, joint_long);
  add_surv_options(joint_cmd, joint_surv);
  joint_cmd->add_option("--spec", joint_spec, "model spec JSON file")->required();
  joint_cmd->add_option("--assoc", joint_assoc, "value, value-slope or shared-re");
  joint_cmd->add_option("--transform-covariate", joint_transform_cov,
                        "interaction covariate for the transformed association");

  // MCMC overrides shared by fit-joint and simulate (--seed).
  long long iter = -1, adapt = -1, burnin = -1, thin = -1;
  long long seed = -1;
  app.add_option("--seed", seed, "RNG seed override");
  joint_cmd->add_option("--iter", iter, "MCMC iterations");
  joint_cmd->add_option("--adapt", adapt, "adaptation iterations");
  joint_cmd->add_option("--burnin", burnin, "burn-in iterations");
  joint_cmd->add_option("--thin", thin, "thinning interval");

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "chain diagnostics from chains.csv");
  std::string diag_chains;
  diag_cmd->add_option("--chains", diag_chains, "chains CSV file")->required();

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "compare fitted joint models");
  std::vector<std::string> cmp_dirs;
  cmp_cmd->add_option("dirs", cmp_dirs, "fit-joint output directories")
      ->required()
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    set_max_threads(threads);
    OutputSink sink = open_output(out_path, force);

    json config;
    for (int i = 1; i < argc; ++i) config["argv"].push_back(argv[i]);
    config["threads"] = threads;

    if (*lmm_cmd) {
      return cmd_fit_lmm(lmm_long, lmm_fixed, lmm_random, lmm_method, sink, config);
    }
    if (*cox_cmd) {
      return cmd_fit_cox(cox_surv, cox_formula, cox_strata, sink, config);
    }
    if (*km_cmd) {
      return cmd_km(km_surv, km_group, svg, sink, config);
    }
    if (*zph_cmd) {
      return cmd_zph(zph_surv, zph_formula, zph_transform, sink, config);
    }
    if (*sim_cmd) {
      std::optional<std::uint64_t> s;
      if (seed >= 0) s = static_cast<std::uint64_t>(seed);
      return cmd_simulate(sim_spec, sink, config, s);
    }
    if (*joint_cmd) {
      std::optional<McmcConfig> overrides;
      if (iter >= 0 || adapt >= 0 || burnin >= 0 || thin >= 0 || seed >= 0) {
        JointSpecJson base = parse_joint_spec(read_file(joint_spec));
        McmcConfig mc = base.mcmc;
        if (iter >= 0) mc.n_iter = static_cast<int>(iter);
        if (adapt >= 0) mc.adapt = static_cast<int>(adapt);
        if (burnin >= 0) mc.burnin = static_cast<int>(burnin);
        if (thin >= 0) mc.thin = static_cast<int>(thin);
        if (seed >= 0) mc.seed = static_cast<std::uint64_t>(seed);
        overrides = mc;
      }
      return cmd_fit_joint(joint_long, joint_surv, joint_spec, sink, config,
                           overrides ? &*overrides : nullptr, joint_assoc,
                           joint_transform_cov, svg);
    }
    if (*diag_cmd) {
      return cmd_diagnose(diag_chains, svg, sink, config);
    }
    if (*cmp_cmd) {
      return cmd_compare(cmp_dirs, sink, config);
    }
    std::cerr << "usage-error: no subcommand\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric-error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "data-error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
