#include "jointfit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "jointfit/errors.hpp"

namespace jointfit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_number(const std::string& s, const std::string& column, std::size_t row) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row) + ": column '" + column +
                     "': cannot parse '" + s + "' as a number");
  }
  return v;
}

// Covariates accept {0, 1, true, false, TRUE, FALSE} or plain numbers.
double parse_covariate(const std::string& s, const std::string& column, std::size_t row) {
  if (s == "true" || s == "TRUE") return 1.0;
  if (s == "false" || s == "FALSE") return 0.0;
  return parse_number(s, column, row);
}

bool parse_status(const std::string& s, std::size_t row) {
  if (s == "1" || s == "true" || s == "TRUE") return true;
  if (s == "0" || s == "false" || s == "FALSE") return false;
  throw ParseError("row " + std::to_string(row) +
                   ": event indicator must be 0/1 or true/false, got '" + s + "'");
}

struct Header {
  std::vector<std::string> names;
  int index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
  }
};

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw SchemaError("empty input: header row required");
  }
  return Header{split_csv_line(line)};
}

int require_column(const Header& h, const std::string& name) {
  const int idx = h.index_of(name);
  if (idx < 0) throw SchemaError("missing required column '" + name + "'");
  return idx;
}

}  // namespace

bool LongitudinalData::operator==(const LongitudinalData& o) const {
  return covariate_names == o.covariate_names && records == o.records;
}

bool SurvivalData::operator==(const SurvivalData& o) const {
  return covariate_names == o.covariate_names && records == o.records;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

LongitudinalData parse_longitudinal_csv(std::istream& in, const LongSchema& schema) {
  const Header header = read_header(in);
  const int id_col = require_column(header, schema.id);
  const int time_col = require_column(header, schema.time);
  const int resp_col = require_column(header, schema.response);

  LongitudinalData data;
  data.schema = schema;
  for (std::size_t c = 0; c < header.names.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (ci != id_col && ci != time_col && ci != resp_col) {
      data.covariate_names.push_back(header.names[c]);
    }
  }

  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.names.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.names.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    LongitudinalRecord rec;
    rec.subject_id = fields[id_col];
    if (rec.subject_id.empty()) {
      throw ValidationError("row " + std::to_string(row) + ": empty subject id");
    }
    rec.time = parse_number(fields[time_col], schema.time, row);
    rec.response = parse_number(fields[resp_col], schema.response, row);
    for (std::size_t c = 0; c < header.names.size(); ++c) {
      const int ci = static_cast<int>(c);
      if (ci == id_col || ci == time_col || ci == resp_col) continue;
      if (fields[c].empty()) {
        throw ValidationError("row " + std::to_string(row) + ": missing value in column '" +
                              header.names[c] + "'");
      }
      rec.covariates[header.names[c]] = parse_covariate(fields[c], header.names[c], row);
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

SurvivalData parse_survival_csv(std::istream& in, const SurvSchema& schema) {
  const Header header = read_header(in);
  const int id_col = require_column(header, schema.id);
  const int time_col = require_column(header, schema.time);
  const int status_col = require_column(header, schema.status);

  SurvivalData data;
  data.schema = schema;
  for (std::size_t c = 0; c < header.names.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (ci != id_col && ci != time_col && ci != status_col) {
      data.covariate_names.push_back(header.names[c]);
    }
  }

  std::set<std::string> seen;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.names.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.names.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    SurvivalRecord rec;
    rec.subject_id = fields[id_col];
    if (rec.subject_id.empty()) {
      throw ValidationError("row " + std::to_string(row) + ": empty subject id");
    }
    if (!seen.insert(rec.subject_id).second) {
      throw ValidationError("row " + std::to_string(row) + ": duplicate subject id '" +
                            rec.subject_id + "'");
    }
    rec.event_time = parse_number(fields[time_col], schema.time, row);
    if (rec.event_time < 0.0) {
      throw ValidationError("row " + std::to_string(row) + ": negative event time");
    }
    rec.event = parse_status(fields[status_col], row);
    for (std::size_t c = 0; c < header.names.size(); ++c) {
      const int ci = static_cast<int>(c);
      if (ci == id_col || ci == time_col || ci == status_col) continue;
      if (fields[c].empty()) {
        throw ValidationError("row " + std::to_string(row) + ": missing value in column '" +
                              header.names[c] + "'");
      }
      rec.baseline_covariates[header.names[c]] =
          parse_covariate(fields[c], header.names[c], row);
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

void write_longitudinal_csv(std::ostream& out, const LongitudinalData& data) {
  out << data.schema.id << ',' << data.schema.time << ',' << data.schema.response;
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& rec : data.records) {
    out << rec.subject_id << ',' << format_double(rec.time) << ','
        << format_double(rec.response);
    for (const auto& name : data.covariate_names) {
      out << ',' << format_double(rec.covariates.at(name));
    }
    out << '\n';
  }
}

void write_survival_csv(std::ostream& out, const SurvivalData& data) {
  out << data.schema.id << ',' << data.schema.time << ',' << data.schema.status;
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& rec : data.records) {
    out << rec.subject_id << ',' << format_double(rec.event_time) << ','
        << (rec.event ? '1' : '0');
    for (const auto& name : data.covariate_names) {
      out << ',' << format_double(rec.baseline_covariates.at(name));
    }
    out << '\n';
  }
}

JointDataset join_datasets(LongitudinalData longitudinal, SurvivalData survival) {
  if (longitudinal.records.empty()) throw ValidationError("no longitudinal records");
  if (survival.records.empty()) throw ValidationError("no survival records");

  std::sort(survival.records.begin(), survival.records.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
  std::stable_sort(longitudinal.records.begin(), longitudinal.records.end(),
                   [](const auto& a, const auto& b) {
                     if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
                     return a.time < b.time;
                   });

  JointDataset ds;
  ds.survival = std::move(survival);
  ds.longitudinal = std::move(longitudinal);
  for (std::size_t i = 0; i < ds.survival.records.size(); ++i) {
    ds.subject_index[ds.survival.records[i].subject_id] = static_cast<int>(i);
  }

  for (const auto& rec : ds.longitudinal.records) {
    auto it = ds.subject_index.find(rec.subject_id);
    if (it == ds.subject_index.end()) {
      throw ValidationError("subject '" + rec.subject_id +
                            "' has longitudinal visits but no survival record");
    }
    const auto& surv = ds.survival.records[it->second];
    if (rec.time > surv.event_time) {
      throw ValidationError("subject '" + rec.subject_id + "': visit at t=" +
                            format_double(rec.time) + " is after event/censoring time " +
                            format_double(surv.event_time));
    }
    if (!std::isfinite(rec.time) || !std::isfinite(rec.response)) {
      throw ValidationError("subject '" + rec.subject_id + "': non-finite visit data");
    }
  }
  return ds;
}

const Eigen::VectorXd& Table::col(const std::string& name) const {
  auto it = columns.find(name);
  if (it == columns.end()) throw ValidationError("unknown column '" + name + "'");
  return it->second;
}

void Table::add(const std::string& name, Eigen::VectorXd values) {
  if (!columns.count(name)) column_order.push_back(name);
  columns[name] = std::move(values);
}

Table longitudinal_table(const JointDataset& data) {
  const auto& recs = data.longitudinal.records;
  const Eigen::Index n = static_cast<Eigen::Index>(recs.size());
  Table t;
  t.ids.reserve(recs.size());
  Eigen::VectorXd time(n), resp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.ids.push_back(recs[i].subject_id);
    time[i] = recs[i].time;
    resp[i] = recs[i].response;
  }
  t.add(data.longitudinal.schema.time, std::move(time));
  t.add(data.longitudinal.schema.response, std::move(resp));
  for (const auto& name : data.longitudinal.covariate_names) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = recs[i].covariates.at(name);
    t.add(name, std::move(v));
  }
  return t;
}

Table survival_table(const JointDataset& data) {
  const auto& recs = data.survival.records;
  const Eigen::Index n = static_cast<Eigen::Index>(recs.size());
  Table t;
  t.ids.reserve(recs.size());
  Eigen::VectorXd time(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.ids.push_back(recs[i].subject_id);
    time[i] = recs[i].event_time;
  }
  t.add(data.survival.schema.time, std::move(time));
  for (const auto& name : data.survival.covariate_names) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = recs[i].baseline_covariates.at(name);
    t.add(name, std::move(v));
  }
  return t;
}

}  // namespace jointfit
