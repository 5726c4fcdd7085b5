#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "apce/data.hpp"
#include "apce/errors.hpp"
#include "apce/nonparam.hpp"
#include "apce/synth.hpp"

using namespace apce;

namespace {

// tiny dataset with exactly controllable cell counts
Dataset cells_dataset(int k, const std::vector<std::tuple<int, int, int, int>>& cells) {
  // (z, d, y, count)
  Dataset ds;
  ds.scale = DecisionScale::with_default_labels(k);
  ds.outcome_names = {"y"};
  int id = 0;
  for (auto [z, d, y, n] : cells)
    for (int i = 0; i < n; ++i) {
      CaseRecord r;
      r.case_id = "c" + std::to_string(++id);
      r.z = z;
      r.d = d;
      r.outcomes = {y};
      r.attribute = "all";
      ds.records.push_back(std::move(r));
    }
  return ds;
}

DgpSpec default_spec(std::uint64_t seed, int n = 4000) {
  DgpSpec s;
  s.n = n;
  s.p = 2;
  s.k = 1;
  s.beta = Eigen::VectorXd::Zero(5);
  s.beta << 0.4, 0.3, -0.2, 0.0, 0.0;
  s.alpha = Eigen::VectorXd::Zero(2);
  s.alpha << 0.5, 0.3;
  s.theta = Eigen::MatrixXd::Zero(2, 1);
  s.theta << 0.3, 0.3;
  s.delta = Eigen::VectorXd::Zero(2);
  s.delta << -0.4, 0.7;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("difference in means matches hand arithmetic") {
  // z=1: 3 of 5 outcomes, z=0: 1 of 4
  Dataset ds = cells_dataset(1, {{1, 0, 1, 3}, {1, 0, 0, 2}, {0, 0, 1, 1}, {0, 0, 0, 3}});
  IttEstimate e = diff_in_means_itt(ds, IttTarget::for_outcome("y"));
  CHECK(e.diff == doctest::Approx(3.0 / 5.0 - 1.0 / 4.0).epsilon(1e-12));
  CHECK(e.n1 == 5);
  CHECK(e.n0 == 4);
  double se = std::sqrt(0.6 * 0.4 / 5.0 + 0.25 * 0.75 / 4.0);
  CHECK(e.ci_high - e.ci_low == doctest::Approx(2 * 1.959963984540054 * se).epsilon(1e-9));

  IttEstimate d0 = diff_in_means_itt(ds, IttTarget::for_decision(0));
  CHECK(d0.diff == doctest::Approx(0.0));
}

TEST_CASE("sign table numerators follow their defining contrasts") {
  Dataset ds = cells_dataset(
      1, {{1, 1, 1, 10}, {1, 1, 0, 30}, {1, 0, 1, 20}, {1, 0, 0, 40},
          {0, 1, 1, 15}, {0, 1, 0, 25}, {0, 0, 1, 18}, {0, 0, 0, 42}});
  auto rows = apce_sign_table(ds, "y", 1, 200, 9);
  REQUIRE(rows.size() == 3);
  // preventable: Pr(Y=1|Z=0) - Pr(Y=1|Z=1)
  CHECK(rows[0].effect == "APCEp");
  CHECK(rows[0].numerator == doctest::Approx(33.0 / 100.0 - 30.0 / 100.0).epsilon(1e-12));
  // risky: Pr(D=1,Y=1|Z=1) - Pr(D=1,Y=1|Z=0)
  CHECK(rows[1].effect == "APCEr");
  CHECK(rows[1].numerator == doctest::Approx(10.0 / 100.0 - 15.0 / 100.0).epsilon(1e-12));
  // safe: Pr(D=0,Y=0|Z=0) - Pr(D=0,Y=0|Z=1)
  CHECK(rows[2].effect == "APCEs");
  CHECK(rows[2].numerator == doctest::Approx(42.0 / 100.0 - 40.0 / 100.0).epsilon(1e-12));
  for (const auto& r : rows) {
    CHECK(r.sign == (r.numerator > 0 ? 1 : r.numerator < 0 ? -1 : 0));
    CHECK(r.ci_low <= r.numerator + 1e-12);
    CHECK(r.ci_high >= r.numerator - 1e-12);
  }

  auto again = apce_sign_table(ds, "y", 1, 200, 9);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].ci_low == again[i].ci_low);
    CHECK(rows[i].ci_high == again[i].ci_high);
  }
}

TEST_CASE("bounds are ordered and cover the simulated potential outcomes") {
  for (int rep = 0; rep < 100; ++rep) {
    DgpSpec spec = default_spec(100 + rep, 5000);
    auto [ds, truth] = synth_generate(spec);
    auto [b1, b0] = potential_outcome_bounds(ds, "y", 1);
    CHECK(b1.lower <= b1.upper + 1e-12);
    CHECK(b0.lower <= b0.upper + 1e-12);
    double pr_y1 = 0.0, pr_y0 = 0.0;  // plug-in truth 1{R > d}
    for (int i = 0; i < ds.n(); ++i) {
      pr_y1 += truth.r[i] > 1 ? 1.0 : 0.0;
      pr_y0 += truth.r[i] > 0 ? 1.0 : 0.0;
    }
    pr_y1 /= ds.n();
    pr_y0 /= ds.n();
    // arm-level sampling noise allowance
    const double slack = 0.025;
    CHECK(b1.lower <= pr_y1 + slack);
    CHECK(b1.upper >= pr_y1 - slack);
    CHECK(b0.lower <= pr_y0 + slack);
    CHECK(b0.upper >= pr_y0 - slack);
  }
}

TEST_CASE("crossed bounds raise a numerical error") {
  // outcome far likelier when detained: monotonicity badly violated, so the
  // treated upper bound drops below the lower bound
  Dataset ds = cells_dataset(
      1, {{1, 1, 1, 50}, {1, 0, 0, 50}, {0, 1, 0, 5}, {0, 0, 0, 90}, {0, 0, 1, 5}});
  CHECK_THROWS_AS(potential_outcome_bounds(ds, "y", 1), NumericalError);
}

TEST_CASE("strong-monotonicity estimates match hand arithmetic") {
  Dataset ds = cells_dataset(
      1, {{0, 0, 1, 20}, {0, 0, 0, 50}, {0, 1, 0, 30},
          {1, 0, 1, 12}, {1, 0, 0, 55}, {1, 1, 0, 33}});
  // Pr(D=0,Y=1|Z=0)=0.2, Pr(D=0,Y=1|Z=1)=0.12
  // Pr(D=0,Y=0|Z=0)=0.5, Pr(D=0,Y=0|Z=1)=0.55
  StrongMonoEstimate e = apce_strong_mono(ds, "y", 1, 0.4, 0.4);
  CHECK(e.apcep_low == doctest::Approx((0.2 - 0.12) / 0.4).epsilon(1e-12));
  CHECK(e.apcep_high == doctest::Approx(e.apcep_low).epsilon(1e-12));
  CHECK(e.apces_low == doctest::Approx((0.5 - 0.55) / 0.6).epsilon(1e-12));

  StrongMonoEstimate band = apce_strong_mono(ds, "y", 1, 0.3, 0.5);
  CHECK(band.apcep_low <= band.apcep_high);
  CHECK(band.apces_low <= band.apces_high);
  CHECK_THROWS_AS(apce_strong_mono(ds, "y", 1, 0.0, 0.4), NumericalError);
}

TEST_CASE("strong-monotonicity estimate tracks the oracle when Y(1) is impossible") {
  // delta pushes stratum k+1 essentially out of existence, so detention
  // always prevents the outcome
  DgpSpec spec = default_spec(7, 20000);
  spec.delta << -0.2, 30.0;
  auto [ds, truth] = synth_generate(spec);
  double pr_y0 = 0.0;
  for (int r : truth.r) pr_y0 += r >= 1 ? 1.0 : 0.0;
  pr_y0 /= ds.n();

  OracleApce oracle = oracle_apce(truth, 1);
  StrongMonoEstimate e = apce_strong_mono(ds, "y", 1, pr_y0, pr_y0);
  CHECK(std::abs(e.apcep_low - oracle.apcep[0]) < 0.04);
}
