#pragma once

#include <optional>
#include <string>
#include <vector>

namespace apce {

// Ordinal decision scale: category 0 is the most lenient, k the harshest.
struct DecisionScale {
  int k = 1;                        // number of non-lenient categories
  std::vector<std::string> labels;  // k+1 labels, index 0 = most lenient

  static DecisionScale with_default_labels(int k);
};

// One experiment unit. Outcome values are aligned with
// Dataset::outcome_names; covariates with Dataset::covariate_names.
struct CaseRecord {
  std::string case_id;
  int z = 0;  // 1 = recommendation shown
  int d = 0;  // ordinal decision in {0..k}
  std::vector<int> outcomes;
  std::vector<double> covariates;          // numeric parse; NaN when non-numeric
  std::vector<std::string> covariates_raw; // as ingested, for categorical encoding
  std::string attribute;                   // protected attribute, kept out of designs
  std::optional<int> hearing_order;
  std::optional<int> dmf;
};

struct Dataset {
  std::vector<CaseRecord> records;
  DecisionScale scale;
  std::vector<std::string> covariate_names;
  std::vector<std::string> outcome_names;

  int n() const { return static_cast<int>(records.size()); }
  int outcome_index(const std::string& name) const;  // throws ValidationError if absent

  std::vector<int> outcome_column(const std::string& name) const;
  std::vector<int> arm_indices(int z) const;
  bool has_hearing_order() const;
};

// Explicit column mapping for CSV ingestion; no header inference.
struct CsvSchema {
  std::string case_id;  // empty: ids generated from row order
  std::string z;
  std::string d;
  std::vector<std::pair<std::string, std::string>> outcomes;  // outcome name -> column
  std::vector<std::string> covariates;
  std::string attribute;      // optional
  std::string hearing_order;  // optional; empty cells mean absent
  std::string dmf;            // optional; empty cells mean absent
};

// Reads a UTF-8 comma-separated file (no quoting), validating every mapped
// value against the scale. Row order is preserved.
Dataset ingest_csv(const std::string& path, const CsvSchema& schema, const DecisionScale& scale);

// Canonical emission; ingest_csv(emit_csv(ds)) reproduces ds field-for-field.
void emit_csv(const Dataset& ds, const std::string& path);
CsvSchema canonical_schema(const Dataset& ds);

// One entry per invariant violation; empty iff the dataset is well formed.
std::vector<std::string> validate_dataset(const Dataset& ds);

}  // namespace apce
