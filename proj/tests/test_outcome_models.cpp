#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "apce/errors.hpp"
#include "apce/normal.hpp"
#include "apce/outcome_models.hpp"
#include "apce/rng.hpp"

using namespace apce;

namespace {

struct ProbitSample {
  std::vector<int> y, d;
  Eigen::MatrixXd x;
};

// y ~ probit with intercepts delta and slopes alpha; d uniform over 0..k
ProbitSample gen_probit(int n, int k, const Eigen::VectorXd& alpha,
                        const Eigen::VectorXd& delta, std::uint64_t seed) {
  RngStream rng(seed);
  ProbitSample s;
  s.x.resize(n, alpha.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < alpha.size(); ++j) s.x(i, j) = rng.normal();
    int d = static_cast<int>(rng.below(static_cast<std::uint64_t>(k + 1)));
    double p = norm_cdf(-delta[d] + s.x.row(i).dot(alpha));
    s.d.push_back(d);
    s.y.push_back(rng.bernoulli(p) ? 1 : 0);
  }
  return s;
}

Eigen::VectorXd fd_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& at) {
  Eigen::VectorXd g(at.size());
  for (int j = 0; j < at.size(); ++j) {
    double h = 1e-6 * std::max(1.0, std::abs(at[j]));
    Eigen::VectorXd lo = at, hi = at;
    lo[j] -= h;
    hi[j] += h;
    g[j] = (f(hi) - f(lo)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("probit analytic gradient matches finite differences") {
  auto s = gen_probit(200, 2, Eigen::Vector2d(0.5, -0.3),
                      Eigen::Vector3d(-0.5, 0.2, 0.8), 11);
  Eigen::VectorXd params(5);
  params << -0.3, std::log(0.5), std::log(0.4), 0.2, -0.1;
  Eigen::VectorXd analytic = probit_loglik_grad(s.y, s.d, s.x, 2, params);
  Eigen::VectorXd numeric = fd_grad(
      [&](const Eigen::VectorXd& p) { return probit_loglik(s.y, s.d, s.x, 2, p); }, params);
  for (int j = 0; j < params.size(); ++j)
    CHECK(analytic[j] == doctest::Approx(numeric[j]).epsilon(1e-4));
}

TEST_CASE("ordinal gradient matches finite differences for both links") {
  RngStream rng(5);
  int n = 150;
  Eigen::MatrixXd x(n, 2);
  std::vector<int> d;
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    d.push_back(static_cast<int>(rng.below(3)));
  }
  Eigen::VectorXd params(4);
  params << -0.4, std::log(0.9), 0.3, -0.2;
  for (Link link : {Link::Probit, Link::Logit}) {
    Eigen::VectorXd analytic = ordinal_loglik_grad(d, x, link, 2, params);
    Eigen::VectorXd numeric = fd_grad(
        [&](const Eigen::VectorXd& p) { return ordinal_loglik(d, x, link, 2, p); }, params);
    for (int j = 0; j < params.size(); ++j)
      CHECK(analytic[j] == doctest::Approx(numeric[j]).epsilon(1e-4));
  }
}

TEST_CASE("probit recovery stays within three standard errors") {
  Eigen::Vector2d alpha(0.5, -0.3);
  Eigen::Vector2d delta(-0.4, 0.6);
  int total = 0, within = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto s = gen_probit(5000, 1, alpha, delta, 1000 + rep);
    ProbitFit fit = fit_outcome_probit(s.y, s.d, s.x, 1);
    REQUIRE(fit.converged);
    Eigen::VectorXd truth(4);
    truth << delta[0], delta[1], alpha[0], alpha[1];
    Eigen::VectorXd est(4);
    est << fit.delta[0], fit.delta[1], fit.alpha[0], fit.alpha[1];
    for (int j = 0; j < 4; ++j) {
      double se = std::sqrt(fit.vcov(j, j));
      ++total;
      if (std::abs(est[j] - truth[j]) < 3 * se) ++within;
    }
  }
  CHECK(static_cast<double>(within) / total >= 0.95);
}

TEST_CASE("ordinal recovery stays within three standard errors") {
  RngStream root(77);
  Eigen::Vector2d beta(0.6, -0.4);
  Eigen::Vector2d cuts(-0.5, 0.8);
  int total = 0, within = 0;
  for (int rep = 0; rep < 40; ++rep) {
    RngStream rng = root.substream(rep);
    int n = 4000;
    Eigen::MatrixXd x(n, 2);
    std::vector<int> d;
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = rng.normal();
      double star = x.row(i).dot(beta) + rng.normal();
      d.push_back(star <= cuts[0] ? 0 : star <= cuts[1] ? 1 : 2);
    }
    OrdinalFit fit = fit_ordinal(d, x, Link::Probit, 2);
    REQUIRE(fit.converged);
    Eigen::VectorXd truth(4), est(4);
    truth << cuts[0], cuts[1], beta[0], beta[1];
    est << fit.cutpoints[0], fit.cutpoints[1], fit.beta[0], fit.beta[1];
    for (int j = 0; j < 4; ++j) {
      ++total;
      if (std::abs(est[j] - truth[j]) < 3 * std::sqrt(fit.vcov(j, j))) ++within;
    }
  }
  CHECK(static_cast<double>(within) / total >= 0.95);
}

TEST_CASE("category probabilities form a distribution and respect ordering") {
  RngStream rng(3);
  int n = 500;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> d;
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    double star = 0.8 * x(i, 0) + rng.normal();
    d.push_back(star <= -0.3 ? 0 : star <= 0.7 ? 1 : 2);
  }
  for (Link link : {Link::Probit, Link::Logit}) {
    OrdinalFit fit = fit_ordinal(d, x, link, 2);
    CHECK(fit.cutpoints[1] > fit.cutpoints[0]);
    Eigen::VectorXd probe(1);
    probe << 0.4;
    Eigen::VectorXd p = fit.category_probs(probe);
    REQUIRE(p.size() == 3);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-10));
    for (int j = 0; j < 3; ++j) CHECK(p[j] >= 0.0);
  }
}

TEST_CASE("degenerate inputs are rejected") {
  Eigen::MatrixXd x(6, 1);
  x << 0.1, -0.2, 0.5, 1.2, -0.7, 0.3;
  std::vector<int> d = {0, 1, 0, 1, 0, 1};
  std::vector<int> flat_y = {0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(fit_outcome_probit(flat_y, d, x, 1), ValidationError);

  std::vector<int> no_mid = {0, 2, 0, 2, 0, 2};  // category 1 never observed
  CHECK_THROWS_AS(fit_ordinal(no_mid, x, Link::Probit, 2), ValidationError);
}

TEST_CASE("nondecreasing intercepts hold even under weak signal") {
  auto s = gen_probit(300, 2, Eigen::Vector2d(0.1, 0.0),
                      Eigen::Vector3d(0.0, 0.02, 0.04), 8);
  ProbitFit fit = fit_outcome_probit(s.y, s.d, s.x, 2);
  CHECK(fit.delta[1] >= fit.delta[0] - 1e-12);
  CHECK(fit.delta[2] >= fit.delta[1] - 1e-12);
}
