#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "apce/errors.hpp"
#include "apce/normal.hpp"
#include "apce/synth.hpp"

using namespace apce;

namespace {

DgpSpec base_spec() {
  DgpSpec s;
  s.n = 4000;
  s.p = 2;
  s.k = 1;
  s.beta = Eigen::VectorXd::Zero(5);
  s.beta << 0.5, 0.4, -0.3, 0.0, 0.0;
  s.alpha = Eigen::VectorXd::Zero(2);
  s.alpha << 0.5, 0.4;
  s.theta = Eigen::MatrixXd::Zero(2, 1);
  s.theta << 0.4, 0.4;
  s.delta = Eigen::VectorXd::Zero(2);
  s.delta << -0.5, 0.8;
  s.seed = 31;
  return s;
}

}  // namespace

TEST_CASE("spec validation rejects malformed inputs") {
  DgpSpec s = base_spec();
  CHECK_NOTHROW(s.validate());

  DgpSpec bad = s;
  bad.beta = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = s;
  bad.k = 2;
  bad.theta = Eigen::MatrixXd::Zero(2, 2);
  bad.theta << 0.5, 0.2, 0.1, 0.6;  // first row decreasing
  bad.delta = Eigen::VectorXd::Zero(3);
  bad.delta << -0.5, 0.0, 0.8;
  bad.beta = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = s;
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = s;
  bad.delta << 0.8, -0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("generation is deterministic and internally consistent") {
  DgpSpec s = base_spec();
  s.attribute_split = 0.5;
  s.hearing_dates = 7;
  auto [ds, truth] = synth_generate(s);
  auto [ds2, truth2] = synth_generate(s);

  REQUIRE(ds.n() == s.n);
  CHECK(validate_dataset(ds).empty());
  std::set<std::string> labels;
  for (int i = 0; i < ds.n(); ++i) {
    const auto& rec = ds.records[i];
    CHECK(rec.d == (rec.z == 1 ? truth.d1[i] : truth.d0[i]));
    CHECK(rec.outcomes[0] == truth.y_potential(i, rec.d));
    CHECK(*rec.hearing_order == 1 + i % 7);
    labels.insert(rec.attribute);
    CHECK(ds2.records[i].covariates == rec.covariates);
    CHECK(ds2.records[i].z == rec.z);
  }
  CHECK(labels == std::set<std::string>{"a", "b"});
  CHECK(truth2.r == truth.r);
}

TEST_CASE("zero treatment effect makes the potential decisions coincide") {
  DgpSpec s = base_spec();
  s.beta[0] = 0.0;  // z main effect and interactions all zero
  s.n = 3000;
  auto [ds, truth] = synth_generate(s);
  CHECK(truth.d0 == truth.d1);
  OracleApce oa = oracle_apce(truth, s.k);
  for (int r = 0; r <= s.k + 1; ++r) {
    if (oa.empty_stratum[r]) continue;
    for (int d = 0; d <= s.k; ++d) CHECK(oa.apce(d, r) == 0.0);
  }
  CHECK(oa.apces == 0.0);
}

TEST_CASE("stratum frequencies match the normal-gap probabilities when alpha is zero") {
  DgpSpec s = base_spec();
  s.alpha.setZero();
  s.n = 200000;
  auto [ds, truth] = synth_generate(s);
  // R counts strict threshold crossings of a standard normal
  double p0 = norm_cdf(s.delta[0]);
  double p1 = norm_cdf(s.delta[1]) - norm_cdf(s.delta[0]);
  double p2 = 1.0 - norm_cdf(s.delta[1]);
  CHECK(std::abs(truth.stratum_proportions[0] - p0) < 0.01);
  CHECK(std::abs(truth.stratum_proportions[1] - p1) < 0.01);
  CHECK(std::abs(truth.stratum_proportions[2] - p2) < 0.01);
}

TEST_CASE("plug-in effects match the closed form under a coin covariate") {
  DgpSpec s;
  s.n = 400000;
  s.p = 1;
  s.k = 1;
  s.beta = Eigen::VectorXd::Zero(3);
  s.beta << 0.5, 0.4, -0.3;
  s.alpha = Eigen::VectorXd::Zero(1);
  s.alpha << 0.6;
  s.theta = Eigen::MatrixXd::Zero(2, 1);
  s.theta << 0.3, 0.5;
  s.delta = Eigen::VectorXd::Zero(2);
  s.delta << -0.4, 0.7;
  s.rho = 0.0;
  s.covariate_laws = {CovariateLaw::Coin};
  s.seed = 91;
  auto [ds, truth] = synth_generate(s);
  OracleApce oa = oracle_apce(truth, s.k);

  // with rho = 0 the decision and risk latents are independent given x, so
  // every joint cell is a product of normal-gap probabilities mixed over the
  // two covariate values
  auto pr_d0 = [&](int z, double x) {
    double eta = s.beta[1] * x + (z == 1 ? s.beta[0] + s.beta[2] * x : 0.0);
    return norm_cdf(s.theta(z, 0) - eta);
  };
  auto pr_r = [&](int r, double x) {
    double eta = s.alpha[0] * x;
    if (r == 0) return norm_cdf(s.delta[0] - eta);
    if (r == 1) return norm_cdf(s.delta[1] - eta) - norm_cdf(s.delta[0] - eta);
    return 1.0 - norm_cdf(s.delta[1] - eta);
  };
  for (int r = 0; r <= 2; ++r) {
    double w = 0.0, num0 = 0.0;
    for (double x : {0.0, 1.0}) {
      double pr = 0.5 * pr_r(r, x);
      w += pr;
      num0 += pr * (pr_d0(1, x) - pr_d0(0, x));
    }
    double apce_d0 = num0 / w;
    CHECK(std::abs(oa.apce(0, r) - apce_d0) < 0.015);
    CHECK(std::abs(oa.apce(1, r) + apce_d0) < 0.015);  // k=1: cells sum to zero
  }
  CHECK(std::abs(oa.apces - oa.apce(0, 0)) < 1e-15);
  // preventable stratum: APCEp(1) = Pr{D(1)>=1|R=1} - Pr{D(0)>=1|R=1}
  double w = 0.0, num = 0.0;
  for (double x : {0.0, 1.0}) {
    double pr = 0.5 * pr_r(1, x);
    w += pr;
    num += pr * ((1.0 - pr_d0(1, x)) - (1.0 - pr_d0(0, x)));
  }
  CHECK(std::abs(oa.apcep[0] - num / w) < 0.015);
}

TEST_CASE("plug-in arithmetic on a handcrafted truth table") {
  OracleTruth truth;
  truth.r = {0, 1, 2, 2};
  truth.d0 = {1, 0, 1, 0};
  truth.d1 = {0, 1, 1, 1};
  truth.stratum_proportions = {0.25, 0.25, 0.5};
  OracleApce oa = oracle_apce(truth, 1);
  CHECK(oa.apce(0, 0) == doctest::Approx(1.0));
  CHECK(oa.apce(1, 0) == doctest::Approx(-1.0));
  CHECK(oa.apce(0, 1) == doctest::Approx(-1.0));
  CHECK(oa.apce(1, 1) == doctest::Approx(1.0));
  CHECK(oa.apce(0, 2) == doctest::Approx(-0.5));
  CHECK(oa.apce(1, 2) == doctest::Approx(0.5));
  CHECK(oa.apcep[0] == doctest::Approx(1.0));
  CHECK(oa.apces == doctest::Approx(1.0));
  CHECK(oa.stratum_proportions[2] == doctest::Approx(0.5));

  CHECK(truth.y_potential(1, 0) == 1);  // r=1 above d=0
  CHECK(truth.y_potential(1, 1) == 0);
  CHECK(truth.y_potential(0, 0) == 0);
}

TEST_CASE("empty strata are flagged rather than averaged") {
  OracleTruth truth;
  truth.r = {0, 2, 2};
  truth.d0 = {0, 1, 1};
  truth.d1 = {0, 1, 0};
  truth.stratum_proportions = {1.0 / 3, 0.0, 2.0 / 3};
  OracleApce oa = oracle_apce(truth, 1);
  CHECK(oa.empty_stratum[1]);
  CHECK(std::isnan(oa.apce(0, 1)));
  CHECK(std::isnan(oa.apcep[0]));
  CHECK_FALSE(oa.empty_stratum[0]);
}

TEST_CASE("oracle fairness gap on a handcrafted table") {
  OracleTruth truth;
  truth.r = {1, 1, 1, 1};
  truth.d0 = {1, 1, 0, 0};
  truth.d1 = {1, 0, 0, 0};
  std::vector<std::string> attrs = {"a", "a", "b", "b"};
  // z=0: group a detains both, group b none
  CHECK(oracle_fairness_delta(truth, attrs, 1, 0, 1) == doctest::Approx(1.0));
  // z=1: group a detains half, group b none
  CHECK(oracle_fairness_delta(truth, attrs, 1, 1, 1) == doctest::Approx(0.5));
  std::vector<std::string> one_group = {"a", "a", "a", "a"};
  CHECK_THROWS_AS(oracle_fairness_delta(truth, one_group, 1, 0, 1), ValidationError);
}

TEST_CASE("oracle export round trips through the csv") {
  DgpSpec s = base_spec();
  s.n = 25;
  auto [ds, truth] = synth_generate(s);
  std::string path = "oracle_test_tmp.csv";
  emit_oracle_csv(ds, truth, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "case_id,r,d0,d1");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string id, r, d0, d1;
    std::getline(ss, id, ',');
    std::getline(ss, r, ',');
    std::getline(ss, d0, ',');
    std::getline(ss, d1, ',');
    CHECK(id == ds.records[rows].case_id);
    CHECK(std::stoi(r) == truth.r[rows]);
    CHECK(std::stoi(d0) == truth.d0[rows]);
    CHECK(std::stoi(d1) == truth.d1[rows]);
    ++rows;
  }
  CHECK(rows == 25);
  std::remove(path.c_str());
}

TEST_CASE("reference dataset reproduces its published margins") {
  Dataset ds = reference_trial_dataset();
  CHECK(ds.n() == 1891);
  CHECK(ds.scale.k == 2);
  int n1 = 0, fta1 = 0;
  for (const auto& r : ds.records) {
    if (r.z == 1) {
      ++n1;
      fta1 += r.outcomes[0];
    }
  }
  CHECK(n1 == 948);
  CHECK(fta1 == 221 + 45 + 16);
}
