#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "apce/data.hpp"
#include "apce/outcome_models.hpp"

namespace apce {

// Per-case stratum probabilities e_r(x), r = 0..k+1. Rows sum to 1; raw
// negatives (monotonicity violations, possible on the binary-collapse path)
// are clipped with the pre-clip values logged in the metadata fields.
struct PrincipalScoreTable {
  Eigen::MatrixXd scores;  // n x (k+2)
  std::string outcome;
  std::string source = "mle";
  int negative_raw_count = 0;
  double most_negative_raw = 0.0;

  int n() const { return static_cast<int>(scores.rows()); }
  int strata() const { return static_cast<int>(scores.cols()); }
};

struct ApceEstimate {
  int stratum = 0;
  std::string decision;  // ">=r" | "=d"
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string method;  // "hajek" | "bayes"
  std::string outcome;
};

PrincipalScoreTable principal_scores(const ProbitFit& fit, const Eigen::MatrixXd& x,
                                     const std::string& outcome);

// Which decision event the weighted contrast targets.
struct DecisionTarget {
  static DecisionTarget at_least(int r) { return {true, r}; }
  static DecisionTarget exactly(int d) { return {false, d}; }
  bool threshold;  // true: 1(D >= value); false: 1(D == value)
  int value;
  std::string label() const {
    return (threshold ? ">=" : "=") + std::to_string(value);
  }
};

// Hajek point estimate: within-arm weighted means of the decision event with
// weights e_r(X_i), differenced across arms.
double hajek_apce(const Dataset& ds, const PrincipalScoreTable& scores, int r,
                  const DecisionTarget& target);

// Percentile bootstrap, resampling cases stratified by arm; the statistic is
// refit on every replicate. Throws if more than 10% of replicates fail.
struct BootstrapInterval {
  double ci_low = 0.0;
  double ci_high = 0.0;
  int failures = 0;
};
BootstrapInterval bootstrap_ci(const Dataset& ds,
                               const std::function<double(const Dataset&)>& statistic, int b,
                               std::uint64_t seed, int threads = 1);

// Binary-decision path (k collapsed to 1): APCEp/APCEr/APCEs from the
// weight functions w_P, w_R, w_S. e_P(x) < 0 anywhere flags a testable
// monotonicity violation without suppressing the estimate.
struct BinaryIpwResult {
  double apcep = 0.0;
  double apcer = 0.0;
  double apces = 0.0;
  bool testable_violation = false;
  double min_ep = 0.0;
};
BinaryIpwResult apce_binary_ipw(const Dataset& ds, const Eigen::VectorXd& p_y1_given_d1,
                                const Eigen::VectorXd& p_y1_given_d0, int dichotomize_at);
BinaryIpwResult apce_binary_ipw(const Dataset& ds, const ProbitFit& binary_fit,
                                const Eigen::MatrixXd& x, int dichotomize_at);

}  // namespace apce
