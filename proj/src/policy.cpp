#include "apce/policy.hpp"

#include <cmath>
#include <limits>

#include "apce/errors.hpp"

namespace apce {

void UtilitySpec::validate() const {
  if (!(c0 >= 0.0) || !(c1 >= 0.0) || !std::isfinite(c0) || !std::isfinite(c1))
    throw ValidationError("utility costs must be finite and nonnegative");
}

OptimalRule optimal_rule(const PrincipalScoreTable& scores, const UtilitySpec& spec) {
  spec.validate();
  const int n = scores.n();
  const int k = scores.strata() - 2;
  OptimalRule out;
  out.decisions.resize(n);
  out.g.resize(n, k + 1);
  for (int i = 0; i < n; ++i) {
    // prefix[d] = sum_{r<=d-1} e_r over strata 0..k+1
    double total = scores.scores.row(i).sum();
    double below = 0.0;
    int best = 0;
    double best_g = -std::numeric_limits<double>::infinity();
    for (int d = 0; d <= k; ++d) {
      double e_d = scores.scores(i, d);
      double at_most = below + e_d;
      double above = total - at_most;
      double g = at_most - spec.c0 * above - spec.c1 * below;
      out.g(i, d) = g;
      if (g > best_g) {
        best_g = g;
        best = d;
      }
      below = at_most;
    }
    out.decisions[i] = best;
  }
  return out;
}

UtilitySurface optimal_share_grid(const PrincipalScoreTable& scores,
                                  const std::vector<double>& c0_grid,
                                  const std::vector<double>& c1_grid,
                                  const std::vector<int>& subset) {
  if (c0_grid.empty() || c1_grid.empty()) throw ValidationError("cost grid is empty");
  if (subset.empty()) throw ValidationError("subset is empty");
  for (int i : subset)
    if (i < 0 || i >= scores.n()) throw ValidationError("subset index out of range");
  UtilitySurface out;
  out.c0_grid = c0_grid;
  out.c1_grid = c1_grid;
  out.value.resize(static_cast<int>(c0_grid.size()), static_cast<int>(c1_grid.size()));
  for (size_t a = 0; a < c0_grid.size(); ++a)
    for (size_t b = 0; b < c1_grid.size(); ++b) {
      OptimalRule rule = optimal_rule(scores, {c0_grid[a], c1_grid[b]});
      int hits = 0;
      for (int i : subset)
        if (rule.decisions[i] >= 1) ++hits;
      out.value(static_cast<int>(a), static_cast<int>(b)) =
          static_cast<double>(hits) / static_cast<double>(subset.size());
    }
  return out;
}

double expected_utility(const PrincipalScoreTable& scores, const std::vector<int>& decisions,
                        const UtilitySpec& spec) {
  spec.validate();
  const int n = scores.n();
  if (static_cast<int>(decisions.size()) != n)
    throw ValidationError("decision vector length does not match score table");
  const int strata = scores.strata();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    int d = decisions[i];
    if (d < 0 || d >= strata - 1) throw ValidationError("decision out of scale range");
    double u = 0.0;
    for (int r = 0; r < strata; ++r) {
      double e = scores.scores(i, r);
      if (d == r)
        u += e;
      else if (d > r)
        u += (1.0 - spec.c1) * e;
      else
        u += -spec.c0 * e;
    }
    total += u;
  }
  return total / static_cast<double>(n);
}

ProvisionRule optimal_provision(const PrincipalScoreTable& scores,
                                const Eigen::MatrixXd& p_d_given_z0,
                                const Eigen::MatrixXd& p_d_given_z1) {
  const int n = scores.n();
  const int k = scores.strata() - 2;
  if (p_d_given_z0.rows() != n || p_d_given_z1.rows() != n ||
      p_d_given_z0.cols() != k + 1 || p_d_given_z1.cols() != k + 1)
    throw ValidationError("decision model matrices must be n x (k+1)");
  ProvisionRule out;
  out.h0.resize(n);
  out.h1.resize(n);
  out.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    double h0 = 0.0, h1 = 0.0;
    // provision utility counts agreement of D with R over the on-scale strata
    for (int r = 0; r <= k; ++r) {
      h0 += scores.scores(i, r) * p_d_given_z0(i, r);
      h1 += scores.scores(i, r) * p_d_given_z1(i, r);
    }
    out.h0[i] = h0;
    out.h1[i] = h1;
    out.xi[i] = h1 > h0 ? 1 : 0;
  }
  return out;
}

}  // namespace apce
