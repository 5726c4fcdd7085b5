#pragma once

#include <Eigen/Dense>
#include <vector>

#include "apce/data.hpp"

namespace apce {

// Outcome probit Pr(Y=1 | D=d, x) = Phi(-delta_d + x'alpha), pooled over
// arms, with nondecreasing decision-level intercepts delta_0..delta_k
// enforced by a log-gap reparameterization.
struct ProbitFit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd delta;  // length k+1, nondecreasing
  Eigen::MatrixXd vcov;   // natural scale: (delta_0..delta_k, alpha)
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  int k = 1;

  double prob_y1(const Eigen::VectorXd& x, int d) const;
};

ProbitFit fit_outcome_probit(const std::vector<int>& y, const std::vector<int>& d,
                             const Eigen::MatrixXd& x, int k);
ProbitFit fit_outcome_probit(const Dataset& ds, const std::string& outcome,
                             const Eigen::MatrixXd& x);

enum class Link { Probit, Logit };

// Ordered probit/logit with strictly increasing cutpoints (log-gap
// reparameterization); no intercept column — cutpoints absorb it.
struct OrdinalFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd cutpoints;  // length k, strictly increasing
  Link link = Link::Probit;
  Eigen::MatrixXd vcov;  // natural scale: (cutpoints, beta)
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  int k = 1;

  // Pr(D = d | x) for d = 0..k; sums to 1.
  Eigen::VectorXd category_probs(const Eigen::VectorXd& x) const;
};

OrdinalFit fit_ordinal(const std::vector<int>& d, const Eigen::MatrixXd& x, Link link, int k);

// Analytic log-likelihood gradients exposed for the finite-difference checks.
Eigen::VectorXd probit_loglik_grad(const std::vector<int>& y, const std::vector<int>& d,
                                   const Eigen::MatrixXd& x, int k,
                                   const Eigen::VectorXd& params);
double probit_loglik(const std::vector<int>& y, const std::vector<int>& d,
                     const Eigen::MatrixXd& x, int k, const Eigen::VectorXd& params);
Eigen::VectorXd ordinal_loglik_grad(const std::vector<int>& d, const Eigen::MatrixXd& x,
                                    Link link, int k, const Eigen::VectorXd& params);
double ordinal_loglik(const std::vector<int>& d, const Eigen::MatrixXd& x, Link link, int k,
                      const Eigen::VectorXd& params);

}  // namespace apce
