#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "apce/gibbs.hpp"

namespace apce {

struct FairnessDelta {
  int stratum = 0;
  int z = 0;
  double delta = 0.0;  // posterior mean of the per-draw max gap
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string argmax_a, argmax_a_prime;
  int argmax_d = 0;
  std::string outcome;
  std::vector<double> draw_values;
};

// Max over attribute-group pairs and decision thresholds d of
// |Pr(D(z) >= d | A=a, R=r) - Pr(D(z) >= d | A=a', R=r)|, per retained draw.
// Group-conditional probabilities average joint rectangle probabilities over
// the cases belonging to each group.
FairnessDelta fairness_delta(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                             const std::vector<std::string>& attributes, int r, int z,
                             const std::string& outcome = "");

struct FairnessDeltaDiff {
  int stratum = 0;
  double diff = 0.0;  // posterior mean of delta(z=1) - delta(z=0)
  double ci_low = 0.0;
  double ci_high = 0.0;
  FairnessDelta with_provision, without_provision;
};

FairnessDeltaDiff fairness_delta_diff(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                                      const std::vector<std::string>& attributes, int r,
                                      const std::string& outcome = "");

}  // namespace apce
