#include "apce/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "apce/errors.hpp"

namespace apce {

DecisionScale DecisionScale::with_default_labels(int k) {
  DecisionScale s;
  s.k = k;
  for (int d = 0; d <= k; ++d) s.labels.push_back("d" + std::to_string(d));
  return s;
}

int Dataset::outcome_index(const std::string& name) const {
  for (std::size_t j = 0; j < outcome_names.size(); ++j)
    if (outcome_names[j] == name) return static_cast<int>(j);
  throw ValidationError("unknown outcome: " + name);
}

std::vector<int> Dataset::outcome_column(const std::string& name) const {
  const int j = outcome_index(name);
  std::vector<int> col(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) col[i] = records[i].outcomes[j];
  return col;
}

std::vector<int> Dataset::arm_indices(int z) const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i)
    if (records[i].z == z) idx.push_back(i);
  return idx;
}

bool Dataset::has_hearing_order() const {
  return std::all_of(records.begin(), records.end(),
                     [](const CaseRecord& r) { return r.hearing_order.has_value(); });
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

int parse_int_field(const std::string& v, const std::string& col, int row) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("value out of domain at row " + std::to_string(row) + ", column " +
                          col + ": '" + v + "'");
  }
}

}  // namespace

Dataset ingest_csv(const std::string& path, const CsvSchema& schema, const DecisionScale& scale) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw ValidationError("empty file: " + path);
  const std::vector<std::string> header = split_line(strip_cr(header_line));

  std::unordered_map<std::string, int> col_of;
  for (std::size_t j = 0; j < header.size(); ++j) col_of[header[j]] = static_cast<int>(j);

  auto require_col = [&](const std::string& name) -> int {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw ValidationError("missing column: " + name);
    return it->second;
  };
  auto optional_col = [&](const std::string& name) -> int {
    if (name.empty()) return -1;
    return require_col(name);
  };

  const int c_id = schema.case_id.empty() ? -1 : require_col(schema.case_id);
  const int c_z = require_col(schema.z);
  const int c_d = require_col(schema.d);
  const int c_attr = optional_col(schema.attribute);
  const int c_order = optional_col(schema.hearing_order);
  const int c_dmf = optional_col(schema.dmf);
  std::vector<int> c_out, c_cov;
  for (const auto& [name, col] : schema.outcomes) c_out.push_back(require_col(col));
  for (const auto& col : schema.covariates) c_cov.push_back(require_col(col));

  Dataset ds;
  ds.scale = scale;
  for (const auto& [name, col] : schema.outcomes) ds.outcome_names.push_back(name);
  ds.covariate_names = schema.covariates;

  std::unordered_set<std::string> seen_ids;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> f = split_line(line);
    if (f.size() < header.size())
      throw ValidationError("short row " + std::to_string(row) + " in " + path);

    CaseRecord rec;
    rec.case_id = (c_id >= 0) ? f[c_id] : ("row" + std::to_string(row));
    if (!seen_ids.insert(rec.case_id).second)
      throw ValidationError("duplicate case_id: " + rec.case_id);

    rec.z = parse_int_field(f[c_z], schema.z, row);
    if (rec.z != 0 && rec.z != 1)
      throw ValidationError("value out of domain at row " + std::to_string(row) + ", column " +
                            schema.z + ": z must be 0/1");
    rec.d = parse_int_field(f[c_d], schema.d, row);
    if (rec.d < 0 || rec.d > scale.k)
      throw ValidationError("value out of domain at row " + std::to_string(row) + ", column " +
                            schema.d + ": d=" + std::to_string(rec.d) + " outside 0.." +
                            std::to_string(scale.k));
    for (std::size_t j = 0; j < c_out.size(); ++j) {
      const int y = parse_int_field(f[c_out[j]], schema.outcomes[j].second, row);
      if (y != 0 && y != 1)
        throw ValidationError("value out of domain at row " + std::to_string(row) + ", column " +
                              schema.outcomes[j].second + ": outcome must be 0/1");
      rec.outcomes.push_back(y);
    }
    for (std::size_t j = 0; j < c_cov.size(); ++j) {
      const std::string& v = f[c_cov[j]];
      if (v.empty())
        throw ValidationError("missing value at row " + std::to_string(row) + ", column " +
                              schema.covariates[j]);
      rec.covariates_raw.push_back(v);
      try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        rec.covariates.push_back(pos == v.size() ? x
                                                 : std::numeric_limits<double>::quiet_NaN());
      } catch (const std::exception&) {
        rec.covariates.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    rec.attribute = (c_attr >= 0) ? f[c_attr] : "all";
    if (c_order >= 0 && !f[c_order].empty()) {
      const int o = parse_int_field(f[c_order], schema.hearing_order, row);
      if (o <= 0)
        throw ValidationError("value out of domain at row " + std::to_string(row) +
                              ": hearing_order must be positive");
      rec.hearing_order = o;
    }
    if (c_dmf >= 0 && !f[c_dmf].empty()) {
      const int m = parse_int_field(f[c_dmf], schema.dmf, row);
      if (m != 0 && m != 1)
        throw ValidationError("value out of domain at row " + std::to_string(row) +
                              ": dmf must be 0/1");
      rec.dmf = m;
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

CsvSchema canonical_schema(const Dataset& ds) {
  CsvSchema s;
  s.case_id = "case_id";
  s.z = "z";
  s.d = "d";
  for (const auto& name : ds.outcome_names) s.outcomes.emplace_back(name, name);
  s.covariates = ds.covariate_names;
  s.attribute = "attribute";
  s.hearing_order = "hearing_order";
  s.dmf = "dmf";
  return s;
}

void emit_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "case_id,z,d";
  for (const auto& name : ds.outcome_names) out << ',' << name;
  for (const auto& name : ds.covariate_names) out << ',' << name;
  out << ",attribute,hearing_order,dmf\n";
  char buf[64];
  for (const auto& r : ds.records) {
    out << r.case_id << ',' << r.z << ',' << r.d;
    for (int y : r.outcomes) out << ',' << y;
    for (std::size_t j = 0; j < r.covariates_raw.size(); ++j) {
      if (std::isnan(r.covariates[j])) {
        out << ',' << r.covariates_raw[j];
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", r.covariates[j]);
        out << ',' << buf;
      }
    }
    out << ',' << r.attribute;
    out << ',';
    if (r.hearing_order) out << *r.hearing_order;
    out << ',';
    if (r.dmf) out << *r.dmf;
    out << '\n';
  }
}

std::vector<std::string> validate_dataset(const Dataset& ds) {
  std::vector<std::string> report;
  if (ds.scale.k < 1) report.push_back("scale: k must be >= 1");
  if (static_cast<int>(ds.scale.labels.size()) != ds.scale.k + 1)
    report.push_back("scale: labels length must be k+1");

  bool has0 = false, has1 = false;
  std::unordered_set<std::string> ids;
  const std::size_t p = ds.covariate_names.size();
  const std::size_t m = ds.outcome_names.size();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const CaseRecord& r = ds.records[i];
    const std::string at = "case " + r.case_id + ": ";
    if (r.z == 0) has0 = true;
    if (r.z == 1) has1 = true;
    if (r.z != 0 && r.z != 1) report.push_back(at + "z not in {0,1}");
    if (r.d < 0 || r.d > ds.scale.k) report.push_back(at + "d outside 0..k");
    if (r.outcomes.size() != m) report.push_back(at + "outcome count mismatch");
    for (std::size_t j = 0; j < r.outcomes.size(); ++j)
      if (r.outcomes[j] != 0 && r.outcomes[j] != 1)
        report.push_back(at + "outcome not in {0,1}");
    if (r.covariates.size() != p || r.covariates_raw.size() != p)
      report.push_back(at + "covariate dimension mismatch");
    if (!ids.insert(r.case_id).second) report.push_back("duplicate case_id: " + r.case_id);
  }
  if (!has0) report.push_back("arm empty: z=0");
  if (!has1) report.push_back("arm empty: z=1");
  return report;
}

}  // namespace apce
