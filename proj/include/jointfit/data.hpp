#ifndef JOINTFIT_DATA_HPP
#define JOINTFIT_DATA_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace jointfit {

// One longitudinal visit: a response measured at a study time, plus any
// visit-level covariates (stored numerically; booleans as 0/1).
struct LongitudinalRecord {
  std::string subject_id;
  double time = 0.0;
  double response = 0.0;
  std::map<std::string, double> covariates;

  bool operator==(const LongitudinalRecord&) const = default;
};

// One row per subject: follow-up time, event indicator (true = event
// observed, false = right-censored) and baseline covariates.
struct SurvivalRecord {
  std::string subject_id;
  double event_time = 0.0;
  bool event = false;
  std::map<std::string, double> baseline_covariates;

  bool operator==(const SurvivalRecord&) const = default;
};

// Column-name remapping for longitudinal CSV input.
struct LongSchema {
  std::string id = "id";
  std::string time = "time";
  std::string response = "y";
};

// Column-name remapping for survival CSV input.
struct SurvSchema {
  std::string id = "id";
  std::string time = "time";
  std::string status = "status";
};

struct LongitudinalData {
  LongSchema schema;
  std::vector<std::string> covariate_names;  // column order preserved
  std::vector<LongitudinalRecord> records;

  bool operator==(const LongitudinalData&) const;
};

struct SurvivalData {
  SurvSchema schema;
  std::vector<std::string> covariate_names;
  std::vector<SurvivalRecord> records;

  bool operator==(const SurvivalData&) const;
};

// Validated merge of the two sides. Subjects are ordered by id; visits are
// ordered by time within subject. Visits recorded exactly at the event time
// are accepted.
struct JointDataset {
  LongitudinalData longitudinal;
  SurvivalData survival;
  std::map<std::string, int> subject_index;  // id -> row in survival.records

  int n_subjects() const { return static_cast<int>(survival.records.size()); }
  int n_observations() const { return static_cast<int>(longitudinal.records.size()); }

  bool operator==(const JointDataset& o) const {
    return longitudinal == o.longitudinal && survival == o.survival;
  }
};

LongitudinalData parse_longitudinal_csv(std::istream& in, const LongSchema& schema = {});
SurvivalData parse_survival_csv(std::istream& in, const SurvSchema& schema = {});

void write_longitudinal_csv(std::ostream& out, const LongitudinalData& data);
void write_survival_csv(std::ostream& out, const SurvivalData& data);

JointDataset join_datasets(LongitudinalData longitudinal, SurvivalData survival);

// Row-oriented numeric view used by the design-matrix builder. `ids` carries
// the grouping variable alongside the numeric columns.
struct Table {
  std::vector<std::string> ids;
  std::vector<std::string> column_order;
  std::map<std::string, Eigen::VectorXd> columns;

  Eigen::Index nrows() const { return static_cast<Eigen::Index>(ids.size()); }
  bool has(const std::string& name) const { return columns.count(name) > 0; }
  const Eigen::VectorXd& col(const std::string& name) const;
  void add(const std::string& name, Eigen::VectorXd values);
};

// Visit-level table: time, response and covariates under their schema names.
Table longitudinal_table(const JointDataset& data);
// Subject-level table: baseline covariates plus the follow-up time.
Table survival_table(const JointDataset& data);

// Shortest round-trip decimal formatting used by all CSV writers.
std::string format_double(double v);

}  // namespace jointfit

#endif
