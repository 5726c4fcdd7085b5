#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "apce/data.hpp"

namespace apce {

struct CategoricalSpec {
  std::string column;
  std::vector<std::string> levels;  // must cover every value seen at encode time
  std::string reference;            // dropped level
};

// Deterministic design-matrix recipe: numeric columns first, then dummy
// columns per categorical (declared level order, reference dropped), then
// pairwise interaction products of already-produced columns.
struct EncodingRecipe {
  std::vector<std::string> numeric;
  std::vector<CategoricalSpec> categoricals;
  std::vector<std::pair<std::string, std::string>> interactions;  // by output column name
};

struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> names;
};

DesignMatrix encode_design(const Dataset& ds, const EncodingRecipe& recipe);

// All covariates taken as numeric, in dataset order.
DesignMatrix numeric_design(const Dataset& ds);

}  // namespace apce
