#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "apce/errors.hpp"
#include "apce/rng.hpp"
#include "apce/spillover.hpp"
#include "apce/synth.hpp"

using namespace apce;

namespace {

Dataset dated_dataset(int n, int dates, std::uint64_t seed, double spill = 0.0) {
  // decisions shift with the previous date's treated share when spill != 0
  RngStream rng(seed);
  Dataset ds;
  ds.scale = DecisionScale::with_default_labels(2);
  ds.outcome_names = {"y"};
  std::vector<double> treated_frac(dates + 1, 0.0);
  std::vector<int> date_n(dates + 1, 0);
  std::vector<int> zs(n), ords(n);
  for (int i = 0; i < n; ++i) {
    ords[i] = 1 + i % dates;
    zs[i] = rng.bernoulli(0.5) ? 1 : 0;
    treated_frac[ords[i]] += zs[i];
    date_n[ords[i]]++;
  }
  for (int o = 1; o <= dates; ++o)
    if (date_n[o]) treated_frac[o] /= date_n[o];
  for (int i = 0; i < n; ++i) {
    CaseRecord r;
    r.case_id = "h" + std::to_string(i);
    r.z = zs[i];
    r.hearing_order = ords[i];
    double zt = ords[i] > 1 ? treated_frac[ords[i] - 1] : 0.0;
    double star = spill * zt + rng.normal();
    r.d = star < -0.2 ? 0 : star < 0.8 ? 1 : 2;
    r.outcomes = {0};
    r.attribute = "all";
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace

TEST_CASE("exposure is the previous date's treated share") {
  Dataset ds;
  ds.scale = DecisionScale::with_default_labels(1);
  ds.outcome_names = {"y"};
  auto add = [&](int z, int ord) {
    CaseRecord r;
    r.case_id = "c" + std::to_string(ds.n());
    r.z = z;
    r.d = 0;
    r.outcomes = {0};
    r.attribute = "all";
    r.hearing_order = ord;
    ds.records.push_back(std::move(r));
  };
  add(1, 1);
  add(1, 1);
  add(0, 1);
  add(0, 2);
  add(1, 2);
  add(0, 3);
  auto zt = compute_ztilde(ds);
  CHECK_FALSE(zt[0].has_value());  // first date has no predecessor
  CHECK(*zt[3] == doctest::Approx(2.0 / 3.0));
  CHECK(*zt[5] == doctest::Approx(0.5));

  ds.records[1].hearing_order.reset();
  CHECK_THROWS_AS(compute_ztilde(ds), ValidationError);
}

TEST_CASE("all-treated predecessors give exposure one") {
  Dataset ds;
  ds.scale = DecisionScale::with_default_labels(1);
  ds.outcome_names = {"y"};
  for (int i = 0; i < 4; ++i) {
    CaseRecord r;
    r.case_id = "c" + std::to_string(i);
    r.z = i < 2 ? 1 : 0;
    r.d = 0;
    r.outcomes = {0};
    r.attribute = "all";
    r.hearing_order = i < 2 ? 1 : 2;
    ds.records.push_back(std::move(r));
  }
  auto zt = compute_ztilde(ds);
  CHECK(*zt[2] == doctest::Approx(1.0));
}

TEST_CASE("constant decisions give a negligible statistic") {
  Dataset ds = dated_dataset(600, 60, 71);
  for (auto& r : ds.records) r.d = 1;
  CrtResult res = crt_test(ds, 200, 5);
  // least-squares on a constant response leaves only rounding noise in the
  // exposure coefficient, observed and resampled alike
  CHECK(res.t_obs < 1e-25);
  CHECK(res.p_value >= 1.0 / 200.0);
  CHECK(res.p_value <= 1.0);
}

TEST_CASE("test is deterministic and bounded below by 1/s") {
  Dataset ds = dated_dataset(600, 60, 72);
  CrtResult a = crt_test(ds, 200, 9);
  CrtResult b = crt_test(ds, 200, 9);
  CHECK(a.p_value == b.p_value);
  CHECK(a.p_value >= 1.0 / 200.0);
  CHECK(a.p_value <= 1.0);
  REQUIRE(static_cast<int>(a.null_draws.size()) == 200);

  CrtResult threaded = crt_test(ds, 200, 9, 4);
  CHECK(threaded.p_value == a.p_value);

  CHECK_THROWS_AS(crt_test(ds, 50, 9), ValidationError);
}

TEST_CASE("null p-values are uniform across simulated datasets") {
  std::vector<double> pvals;
  for (int rep = 0; rep < 200; ++rep)
    pvals.push_back(crt_test(dated_dataset(400, 50, 1000 + rep), 200, rep, 2).p_value);
  std::sort(pvals.begin(), pvals.end());
  // one-sample KS against U(0,1); discreteness at 1/200 is well below the
  // rejection threshold
  double dmax = 0.0;
  const int n = static_cast<int>(pvals.size());
  for (int i = 0; i < n; ++i) {
    dmax = std::max(dmax, std::abs(pvals[i] - (i + 1.0) / n));
    dmax = std::max(dmax, std::abs(pvals[i] - static_cast<double>(i) / n));
  }
  // KS critical value at alpha=0.01
  CHECK(dmax < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("spillover in the generating process is detected") {
  Dataset ds = dated_dataset(2000, 200, 77, 3.0);
  CrtResult res = crt_test(ds, 400, 3);
  CHECK(res.p_value < 0.05);
}

TEST_CASE("power is near the nominal size at omega zero") {
  Dataset ds = dated_dataset(1000, 120, 88);
  auto pts = crt_power(ds, {0.0}, 200, 100, 13, 4);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].power == doctest::Approx(0.05).epsilon(0.8));
  CHECK(std::abs(pts[0].power - 0.05) < 0.04);
}

TEST_CASE("power grows with the spillover coefficient") {
  Dataset ds = dated_dataset(1200, 150, 89);
  auto pts = crt_power(ds, {0.0, 1.5}, 150, 100, 21, 4);
  CHECK(pts[1].power > pts[0].power + 0.2);
}
