#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "apce/data.hpp"
#include "apce/strata.hpp"

namespace apce {

struct GibbsConfig {
  double rho = 0.0;  // fixed latent-error correlation; not sampled
  int chains = 4;
  int iterations = 5000;
  double burn_fraction = 0.5;
  double prior_precision_decision = 0.01;
  double prior_precision_risk = 0.01;
  double cutpoint_prior_sd = 10.0;
  std::uint64_t seed = 1;
  int threads = 1;
  int latent_sweeps = 2;
  bool prior_only = false;  // likelihood disabled; draws reproduce the priors

  void validate() const;
};

// Retained draws, one matrix block per chain (row = retained iteration).
struct PosteriorDraws {
  int p = 0;
  int k = 1;
  double rho = 0.0;
  bool rho_near_singular = false;  // |rho| > 0.98
  std::vector<Eigen::MatrixXd> beta;    // chain -> retained x (2p+1)
  std::vector<Eigen::MatrixXd> alpha;   // chain -> retained x p
  std::vector<Eigen::MatrixXd> theta0;  // chain -> retained x k
  std::vector<Eigen::MatrixXd> theta1;  // chain -> retained x k
  std::vector<Eigen::MatrixXd> delta;   // chain -> retained x (k+1)

  int chains() const { return static_cast<int>(beta.size()); }
  int retained_per_chain() const { return chains() ? static_cast<int>(beta[0].rows()) : 0; }
  int total_retained() const { return chains() * retained_per_chain(); }

  std::vector<std::string> parameter_names() const;
  // flattened (beta, alpha, theta0, theta1, delta) row for chain c, draw t
  Eigen::VectorXd parameter_row(int c, int t) const;
};

// Data-augmented Gibbs sampler for the joint ordinal-decision / latent-risk
// probit model with arm-specific decision cutpoints. Deterministic given
// config.seed; chains use independent substreams.
PosteriorDraws gibbs_run(const Dataset& ds, const std::string& outcome,
                         const Eigen::MatrixXd& x, const GibbsConfig& cfg);

// Split-R-hat (chains halved) per scalar parameter series.
double split_rhat(const std::vector<std::vector<double>>& chains);
std::vector<double> gelman_rubin(const PosteriorDraws& draws);

struct ApceSummary {
  std::vector<ApceEstimate> estimates;       // APCE(d,r) all d,r plus APCEp(r), APCEs
  std::vector<double> stratum_proportions;   // posterior mean Pr(R=r), r=0..k+1
  // per-draw APCEp(r) series, r=1..k (column r-1), for downstream reuse
  Eigen::MatrixXd apcep_draws;
};

// Posterior causal summaries averaged over the supplied cases (optionally a
// subset). Joint probabilities use the product form when rho=0 and bivariate
// rectangle probabilities otherwise.
ApceSummary posterior_apce(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                           const std::string& outcome,
                           const std::vector<int>* subset = nullptr, int thin = 1);

// Independent sampler runs across a grid of fixed correlations.
std::vector<std::pair<double, ApceSummary>> sensitivity_grid(const Dataset& ds,
                                                             const std::string& outcome,
                                                             const Eigen::MatrixXd& x,
                                                             const GibbsConfig& base,
                                                             const std::vector<double>& rhos);

// Nonparametric sensitivity: plug-in evaluation of the stratum-conditional
// decision distribution under covariate-constant deviation ratios xi.
struct NpSensitivityInput {
  int k = 1;
  // z -> n x (k+1) model predictions
  std::array<Eigen::MatrixXd, 2> p_y_given_zd;  // Pr(Y=1 | Z=z, D=d, X_i)
  std::array<Eigen::MatrixXd, 2> p_d_given_z;   // Pr(D=d | Z=z, X_i)
  // z -> (k+1) x (k+1) constants xi[z](r,d); xi[z](r,r) must equal 1
  std::array<Eigen::MatrixXd, 2> xi;
};
// result[z](d, r) = Pr{D(z)=d | R=r} for d=0..k, r=0..k+1
std::array<Eigen::MatrixXd, 2> np_sensitivity(const NpSensitivityInput& in);

}  // namespace apce
