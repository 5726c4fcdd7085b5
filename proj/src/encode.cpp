#include "apce/encode.hpp"

#include <algorithm>
#include <cmath>

#include "apce/errors.hpp"

namespace apce {

namespace {

int covariate_pos(const Dataset& ds, const std::string& name) {
  for (std::size_t j = 0; j < ds.covariate_names.size(); ++j)
    if (ds.covariate_names[j] == name) return static_cast<int>(j);
  throw ValidationError("unknown covariate: " + name);
}

}  // namespace

DesignMatrix encode_design(const Dataset& ds, const EncodingRecipe& recipe) {
  const int n = ds.n();
  DesignMatrix out;

  std::vector<Eigen::VectorXd> cols;
  auto add_col = [&](const std::string& name, Eigen::VectorXd v) {
    out.names.push_back(name);
    cols.push_back(std::move(v));
  };

  for (const auto& name : recipe.numeric) {
    const int j = covariate_pos(ds, name);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      const double x = ds.records[i].covariates[j];
      if (std::isnan(x))
        throw ValidationError("non-numeric value in numeric covariate " + name + " (case " +
                              ds.records[i].case_id + ")");
      v[i] = x;
    }
    add_col(name, std::move(v));
  }

  for (const auto& cat : recipe.categoricals) {
    const int j = covariate_pos(ds, cat.column);
    for (int i = 0; i < n; ++i) {
      const std::string& lvl = ds.records[i].covariates_raw[j];
      if (std::find(cat.levels.begin(), cat.levels.end(), lvl) == cat.levels.end())
        throw ValidationError("unknown level '" + lvl + "' in column " + cat.column +
                              " (case " + ds.records[i].case_id + ")");
    }
    for (const auto& lvl : cat.levels) {
      if (lvl == cat.reference) continue;
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i)
        v[i] = (ds.records[i].covariates_raw[j] == lvl) ? 1.0 : 0.0;
      add_col(cat.column + "." + lvl, std::move(v));
    }
  }

  auto find_out_col = [&](const std::string& name) -> const Eigen::VectorXd& {
    for (std::size_t j = 0; j < out.names.size(); ++j)
      if (out.names[j] == name) return cols[j];
    throw ValidationError("interaction refers to unknown design column: " + name);
  };
  for (const auto& [a, b] : recipe.interactions) {
    Eigen::VectorXd v = find_out_col(a).cwiseProduct(find_out_col(b));
    add_col(a + ":" + b, std::move(v));
  }

  out.x.resize(n, static_cast<int>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.x.col(static_cast<int>(j)) = cols[j];
  return out;
}

DesignMatrix numeric_design(const Dataset& ds) {
  EncodingRecipe recipe;
  recipe.numeric = ds.covariate_names;
  return encode_design(ds, recipe);
}

}  // namespace apce
