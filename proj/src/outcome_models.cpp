#include "apce/outcome_models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "apce/errors.hpp"
#include "apce/normal.hpp"

namespace apce {

namespace {

constexpr double kGradTol = 1e-8;
constexpr int kMaxIter = 100;
constexpr double kSeparationNorm = 1e3;

double log_norm_cdf(double x) {
  if (x > -8.0) return std::log(norm_cdf(x));
  // asymptotic expansion in the far left tail
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * M_PI) +
         std::log1p(-1.0 / (x * x));
}

// phi(x) / Phi(x), stable for very negative x.
double mills(double x) {
  if (x > -8.0) return norm_pdf(x) / norm_cdf(x);
  return std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * M_PI) - log_norm_cdf(x));
}

struct NewtonProblem {
  std::function<double(const Eigen::VectorXd&)> loglik;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
};

struct NewtonResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd neg_hess;  // observed information at the optimum
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

Eigen::MatrixXd fd_hessian(const NewtonProblem& prob, const Eigen::VectorXd& psi) {
  const int q = static_cast<int>(psi.size());
  Eigen::MatrixXd h(q, q);
  for (int j = 0; j < q; ++j) {
    const double step = 1e-5 * std::max(1.0, std::fabs(psi[j]));
    Eigen::VectorXd hi = psi, lo = psi;
    hi[j] += step;
    lo[j] -= step;
    h.col(j) = (prob.grad(hi) - prob.grad(lo)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

// Newton-Raphson with step-halving; the accepted log-likelihood sequence is
// nondecreasing.
NewtonResult newton_maximize(const NewtonProblem& prob, Eigen::VectorXd psi) {
  NewtonResult res;
  double ll = prob.loglik(psi);
  if (!std::isfinite(ll)) throw NumericalError("non-finite log-likelihood at start");
  Eigen::MatrixXd neg_hess;
  for (int it = 1; it <= kMaxIter; ++it) {
    res.iterations = it;
    const Eigen::VectorXd g = prob.grad(psi);
    if (psi.lpNorm<Eigen::Infinity>() > kSeparationNorm)
      throw NumericalError("separation: diverging coefficients");
    // gradient tolerance scales with the log-likelihood magnitude: near the
    // optimum the attainable gradient is limited by rounding in ll itself
    const double gtol = kGradTol * std::max(1.0, std::fabs(ll));
    if (g.lpNorm<Eigen::Infinity>() < gtol) {
      res.converged = true;
      break;
    }
    neg_hess = -fd_hessian(prob, psi);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      step = ldlt.solve(g);
    } else {
      Eigen::MatrixXd ridged = neg_hess;
      ridged.diagonal().array() += 1e-6 + neg_hess.diagonal().cwiseAbs().maxCoeff() * 1e-8;
      step = ridged.ldlt().solve(g);
    }
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      const Eigen::VectorXd cand = psi + scale * step;
      const double cand_ll = prob.loglik(cand);
      if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-12) {
        psi = cand;
        ll = cand_ll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      // ll can no longer improve at double precision; accept if the
      // gradient is already near its rounding floor
      res.converged = prob.grad(psi).lpNorm<Eigen::Infinity>() < 100.0 * gtol;
      break;
    }
  }
  res.params = psi;
  res.loglik = ll;
  res.neg_hess = -fd_hessian(prob, psi);
  return res;
}

Eigen::VectorXd deltas_from_params(const Eigen::VectorXd& psi, int k) {
  Eigen::VectorXd delta(k + 1);
  delta[0] = psi[0];
  for (int l = 1; l <= k; ++l) delta[l] = delta[l - 1] + std::exp(psi[l]);
  return delta;
}

Eigen::VectorXd cutpoints_from_params(const Eigen::VectorXd& psi, int k) {
  Eigen::VectorXd theta(k);
  theta[0] = psi[0];
  for (int j = 1; j < k; ++j) theta[j] = theta[j - 1] + std::exp(psi[j]);
  return theta;
}

double link_cdf(Link link, double x) {
  if (link == Link::Probit) return norm_cdf(x);
  return 1.0 / (1.0 + std::exp(-x));
}

double link_pdf(Link link, double x) {
  if (link == Link::Probit) return norm_pdf(x);
  const double f = 1.0 / (1.0 + std::exp(-std::fabs(x)));
  return f * (1.0 - f);
}

double link_sf(Link link, double x) {
  if (link == Link::Probit) return norm_sf(x);
  return 1.0 / (1.0 + std::exp(x));
}

// F(b) - F(a), computed from the smaller tail.
double prob_between(Link link, double a, double b) {
  double p;
  if (a + b > 0.0)
    p = link_sf(link, a) - link_sf(link, b);
  else
    p = link_cdf(link, b) - link_cdf(link, a);
  return std::max(p, 1e-300);
}

}  // namespace

double probit_loglik(const std::vector<int>& y, const std::vector<int>& d,
                     const Eigen::MatrixXd& x, int k, const Eigen::VectorXd& psi) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(x.cols());
  const Eigen::VectorXd delta = deltas_from_params(psi, k);
  const Eigen::VectorXd xa = x * psi.segment(k + 1, p);
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const double eta = xa[i] - delta[d[i]];
    ll += y[i] ? log_norm_cdf(eta) : log_norm_cdf(-eta);
  }
  return ll;
}

Eigen::VectorXd probit_loglik_grad(const std::vector<int>& y, const std::vector<int>& d,
                                   const Eigen::MatrixXd& x, int k,
                                   const Eigen::VectorXd& psi) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(x.cols());
  const Eigen::VectorXd delta = deltas_from_params(psi, k);
  const Eigen::VectorXd xa = x * psi.segment(k + 1, p);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(psi.size());
  for (int i = 0; i < n; ++i) {
    const double eta = xa[i] - delta[d[i]];
    const double s = y[i] ? mills(eta) : -mills(-eta);
    g[0] -= s;
    for (int l = 1; l <= std::min(d[i], k); ++l) g[l] -= s * std::exp(psi[l]);
    g.segment(k + 1, p) += s * x.row(i).transpose();
  }
  return g;
}

double ProbitFit::prob_y1(const Eigen::VectorXd& x, int d) const {
  return norm_cdf(-delta[d] + x.dot(alpha));
}

ProbitFit fit_outcome_probit(const std::vector<int>& y, const std::vector<int>& d,
                             const Eigen::MatrixXd& x, int k) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(x.cols());
  if (n == 0 || static_cast<int>(d.size()) != n || x.rows() != n)
    throw ValidationError("fit_outcome_probit: inconsistent input sizes");
  const int ones = static_cast<int>(std::count(y.begin(), y.end(), 1));
  if (ones == 0 || ones == n)
    throw ValidationError("outcome has no variation");
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) throw NumericalError("rank-deficient design");
  }

  // start from per-level outcome rates made nondecreasing in severity
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(k + 1 + p);
  {
    std::vector<double> rate(k + 1, 0.0), cnt(k + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      rate[d[i]] += y[i];
      cnt[d[i]] += 1.0;
    }
    double prev = -3.0;
    for (int l = 0; l <= k; ++l) {
      double r = cnt[l] > 0 ? rate[l] / cnt[l] : 0.5;
      r = std::min(0.99, std::max(0.01, r));
      double dl = -norm_quantile(r);
      dl = std::max(dl, prev + 1e-3);
      if (l == 0)
        psi[0] = dl;
      else
        psi[l] = std::log(std::max(dl - prev, 1e-3));
      prev = dl;
    }
  }

  NewtonProblem prob;
  prob.loglik = [&](const Eigen::VectorXd& ps) { return probit_loglik(y, d, x, k, ps); };
  prob.grad = [&](const Eigen::VectorXd& ps) { return probit_loglik_grad(y, d, x, k, ps); };
  const NewtonResult res = newton_maximize(prob, psi);

  ProbitFit fit;
  fit.k = k;
  fit.delta = deltas_from_params(res.params, k);
  fit.alpha = res.params.segment(k + 1, p);
  fit.loglik = res.loglik;
  fit.converged = res.converged;
  fit.iterations = res.iterations;

  // natural-scale covariance by the delta method
  const int q = k + 1 + p;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(q, q);
  for (int dd = 0; dd <= k; ++dd) {
    jac(dd, 0) = 1.0;
    for (int l = 1; l <= dd; ++l) jac(dd, l) = std::exp(res.params[l]);
  }
  jac.block(k + 1, k + 1, p, p).setIdentity();
  Eigen::MatrixXd info_inv =
      res.neg_hess.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  fit.vcov = jac * info_inv * jac.transpose();
  return fit;
}

ProbitFit fit_outcome_probit(const Dataset& ds, const std::string& outcome,
                             const Eigen::MatrixXd& x) {
  const std::vector<int> y = ds.outcome_column(outcome);
  std::vector<int> d(ds.n());
  for (int i = 0; i < ds.n(); ++i) d[i] = ds.records[i].d;
  return fit_outcome_probit(y, d, x, ds.scale.k);
}

double ordinal_loglik(const std::vector<int>& d, const Eigen::MatrixXd& x, Link link, int k,
                      const Eigen::VectorXd& psi) {
  const int n = static_cast<int>(d.size());
  const int p = static_cast<int>(x.cols());
  const Eigen::VectorXd theta = cutpoints_from_params(psi, k);
  const Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(x * psi.segment(k, p))
                                    : Eigen::VectorXd::Zero(n);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = (d[i] == 0) ? -inf : theta[d[i] - 1] - eta[i];
    const double b = (d[i] == k) ? inf : theta[d[i]] - eta[i];
    ll += std::log(prob_between(link, a, b));
  }
  return ll;
}

Eigen::VectorXd ordinal_loglik_grad(const std::vector<int>& d, const Eigen::MatrixXd& x,
                                    Link link, int k, const Eigen::VectorXd& psi) {
  const int n = static_cast<int>(d.size());
  const int p = static_cast<int>(x.cols());
  const Eigen::VectorXd theta = cutpoints_from_params(psi, k);
  const Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(x * psi.segment(k, p))
                                    : Eigen::VectorXd::Zero(n);
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(psi.size());
  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(k);  // dll/dtheta accumulators
  for (int i = 0; i < n; ++i) {
    const double a = (d[i] == 0) ? -inf : theta[d[i] - 1] - eta[i];
    const double b = (d[i] == k) ? inf : theta[d[i]] - eta[i];
    const double prob = prob_between(link, a, b);
    const double fa = (d[i] == 0) ? 0.0 : link_pdf(link, a);
    const double fb = (d[i] == k) ? 0.0 : link_pdf(link, b);
    if (d[i] > 0) dtheta[d[i] - 1] -= fa / prob;
    if (d[i] < k) dtheta[d[i]] += fb / prob;
    if (p > 0) g.segment(k, p) += ((fa - fb) / prob) * x.row(i).transpose();
  }
  // chain rule through the log-gap cutpoint transform
  for (int j = 0; j < k; ++j) {
    g[0] += dtheta[j];
    for (int m = 1; m <= j; ++m) g[m] += dtheta[j] * std::exp(psi[m]);
  }
  return g;
}

Eigen::VectorXd OrdinalFit::category_probs(const Eigen::VectorXd& x) const {
  const double eta = x.dot(beta);
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd probs(k + 1);
  for (int d = 0; d <= k; ++d) {
    const double a = (d == 0) ? -inf : cutpoints[d - 1] - eta;
    const double b = (d == k) ? inf : cutpoints[d] - eta;
    probs[d] = prob_between(link, a, b);
  }
  return probs;
}

OrdinalFit fit_ordinal(const std::vector<int>& d, const Eigen::MatrixXd& x, Link link, int k) {
  const int n = static_cast<int>(d.size());
  const int p = static_cast<int>(x.cols());
  if (n == 0 || (p > 0 && x.rows() != n))
    throw ValidationError("fit_ordinal: inconsistent input sizes");
  std::vector<int> counts(k + 1, 0);
  for (int di : d) {
    if (di < 0 || di > k) throw ValidationError("fit_ordinal: response outside 0..k");
    ++counts[di];
  }
  for (int l = 0; l <= k; ++l)
    if (counts[l] == 0)
      throw ValidationError("empty category: d=" + std::to_string(l));
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) throw NumericalError("rank-deficient design");
  }

  Eigen::VectorXd psi = Eigen::VectorXd::Zero(k + p);
  {
    double cum = 0.0, prev = 0.0;
    for (int j = 0; j < k; ++j) {
      cum += static_cast<double>(counts[j]) / n;
      const double c = std::min(0.999, std::max(0.001, cum));
      const double t = (link == Link::Probit) ? norm_quantile(c) : std::log(c / (1.0 - c));
      if (j == 0)
        psi[0] = t;
      else
        psi[j] = std::log(std::max(t - prev, 1e-3));
      prev = (j == 0) ? t : prev + std::exp(psi[j]);
    }
  }

  NewtonProblem prob;
  prob.loglik = [&](const Eigen::VectorXd& ps) { return ordinal_loglik(d, x, link, k, ps); };
  prob.grad = [&](const Eigen::VectorXd& ps) {
    return ordinal_loglik_grad(d, x, link, k, ps);
  };
  const NewtonResult res = newton_maximize(prob, psi);

  OrdinalFit fit;
  fit.k = k;
  fit.link = link;
  fit.cutpoints = cutpoints_from_params(res.params, k);
  fit.beta = res.params.segment(k, p);
  fit.loglik = res.loglik;
  fit.converged = res.converged;
  fit.iterations = res.iterations;

  const int q = k + p;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(q, q);
  for (int j = 0; j < k; ++j) {
    jac(j, 0) = 1.0;
    for (int m = 1; m <= j; ++m) jac(j, m) = std::exp(res.params[m]);
  }
  jac.block(k, k, p, p).setIdentity();
  Eigen::MatrixXd info_inv = res.neg_hess.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  fit.vcov = jac * info_inv * jac.transpose();
  return fit;
}

}  // namespace apce
