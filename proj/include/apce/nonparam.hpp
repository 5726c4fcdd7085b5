#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apce/data.hpp"

namespace apce {

// Target of an unadjusted arm contrast: a binary outcome, or the indicator
// of one decision category.
struct IttTarget {
  static IttTarget for_outcome(const std::string& name) { return {true, name, -1}; }
  static IttTarget for_decision(int category) { return {false, "", category}; }
  bool is_outcome;
  std::string outcome;
  int category;
  std::string label() const {
    return is_outcome ? outcome : ("d=" + std::to_string(category));
  }
};

struct IttEstimate {
  std::string target;
  double diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n1 = 0;
  int n0 = 0;
};

// Difference in means with a 95% two-sample normal-approximation interval.
IttEstimate diff_in_means_itt(const Dataset& ds, const IttTarget& target);

// The three sign-identified numerators for a dichotomized decision
// (d >= threshold). Signs are identified even though the denominators
// (marginals of the potential outcomes) are not.
struct SignEntry {
  std::string effect;  // "APCEp" | "APCEr" | "APCEs"
  double numerator = 0.0;
  int sign = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};
std::vector<SignEntry> apce_sign_table(const Dataset& ds, const std::string& outcome,
                                       int dichotomize_at, int bootstrap_b = 1000,
                                       std::uint64_t seed = 1);

struct BoundsEstimate {
  std::string target;  // "Pr{Y(1)=1}" | "Pr{Y(0)=1}"
  double lower = 0.0;
  double upper = 0.0;
};
// Nonparametric bounds on the potential-outcome marginals; crossing bounds
// are evidence against monotonicity and raise NumericalError.
std::pair<BoundsEstimate, BoundsEstimate> potential_outcome_bounds(const Dataset& ds,
                                                                   const std::string& outcome,
                                                                   int dichotomize_at);

// Point/interval effects under strong monotonicity (Y(1) == 0), given a
// user-supplied value or interval for Pr{Y(0)=1}.
struct StrongMonoEstimate {
  double apcep_low = 0.0, apcep_high = 0.0;
  double apces_low = 0.0, apces_high = 0.0;
};
StrongMonoEstimate apce_strong_mono(const Dataset& ds, const std::string& outcome,
                                    int dichotomize_at, double pr_y0_low, double pr_y0_high);

}  // namespace apce
