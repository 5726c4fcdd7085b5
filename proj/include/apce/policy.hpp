#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "apce/strata.hpp"

namespace apce {

struct UtilitySpec {
  double c0 = 0.0;  // cost of a negative outcome
  double c1 = 0.0;  // cost of an unnecessarily harsh decision

  void validate() const;
};

struct OptimalRule {
  std::vector<int> decisions;  // per-case argmax_d g_d(x), ties toward smaller d
  Eigen::MatrixXd g;           // n x (k+1) objective values
};

// g_d(x) = sum_{r<=d} e_r - c0 * sum_{r>d} e_r - c1 * sum_{r<d} e_r
OptimalRule optimal_rule(const PrincipalScoreTable& scores, const UtilitySpec& spec);

struct UtilitySurface {
  std::vector<double> c0_grid, c1_grid;
  Eigen::MatrixXd value;  // c0 index x c1 index
  std::string subset, outcome, source;
};

// Share of subset cases whose optimal decision is >= 1 at each grid point.
UtilitySurface optimal_share_grid(const PrincipalScoreTable& scores,
                                  const std::vector<double>& c0_grid,
                                  const std::vector<double>& c1_grid,
                                  const std::vector<int>& subset);

// E[U] = mean_i sum_r e_r(x_i) u(d_i, r), u = 1{d=r} + (1-c1) 1{d>r} - c0 1{d<r}
double expected_utility(const PrincipalScoreTable& scores, const std::vector<int>& decisions,
                        const UtilitySpec& spec);

struct ProvisionRule {
  std::vector<double> h0, h1;  // expected agreement with the stratum per arm
  std::vector<int> xi;         // 1 iff h1 > h0; ties resolve to 0
};

// h_z(x) = sum_r e_r(x) Pr(D=r | Z=z, x); decision model probabilities are
// supplied directly as per-arm category matrices (n x (k+1)).
ProvisionRule optimal_provision(const PrincipalScoreTable& scores,
                                const Eigen::MatrixXd& p_d_given_z0,
                                const Eigen::MatrixXd& p_d_given_z1);

}  // namespace apce
