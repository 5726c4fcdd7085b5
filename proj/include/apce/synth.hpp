#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "apce/data.hpp"

namespace apce {

enum class CovariateLaw { Normal, Coin };  // per-column marginal

struct DgpSpec {
  int n = 1000;
  int p = 2;
  int k = 1;
  Eigen::VectorXd beta;    // 2p+1: (z, x, z*x)
  Eigen::VectorXd alpha;   // p
  Eigen::MatrixXd theta;   // 2 x k increasing rows, per-arm decision cutpoints
  Eigen::VectorXd delta;   // k+1 nondecreasing risk intercepts
  double rho = 0.0;
  std::vector<CovariateLaw> covariate_laws;  // size p; empty means all Normal
  double attribute_split = 0.0;  // > 0: fair-coin labels "a"/"b" with Pr(b)=split
  std::uint64_t seed = 1;
  int hearing_dates = 0;  // > 0: cases dealt round-robin onto this many dates

  void validate() const;
};

struct OracleTruth {
  std::vector<int> r;        // stratum per case, 0..k+1
  std::vector<int> d0, d1;   // potential decisions
  std::vector<double> stratum_proportions;  // empirical, length k+2

  int y_potential(int i, int d) const { return r[i] > d ? 1 : 0; }
};

std::pair<Dataset, OracleTruth> synth_generate(const DgpSpec& spec);

struct OracleApce {
  // apce(d, r) over d=0..k, r=0..k+1; NaN with the flag set when a stratum
  // has no simulated cases
  Eigen::MatrixXd apce;
  std::vector<double> apcep;  // r=1..k
  double apces = 0.0;
  std::vector<bool> empty_stratum;
  std::vector<double> stratum_proportions;
};

// Finite-population plug-in averages of the simulated potential decisions.
OracleApce oracle_apce(const OracleTruth& truth, int k);

// Max between-group gap in Pr(D(z) >= d | A=a, R=r) from simulated truth.
double oracle_fairness_delta(const OracleTruth& truth, const std::vector<std::string>& attrs,
                             int r, int z, int k);

void emit_oracle_csv(const Dataset& ds, const OracleTruth& truth, const std::string& path);

// Built-in 1891-case evaluation dataset: three binary outcomes on a
// three-level decision scale, reconstructed cell by cell from published
// marginal counts (no covariates).
Dataset reference_trial_dataset();

}  // namespace apce
