#include "apce/strata.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include "apce/errors.hpp"
#include "apce/normal.hpp"
#include "apce/rng.hpp"

namespace apce {

PrincipalScoreTable principal_scores(const ProbitFit& fit, const Eigen::MatrixXd& x,
                                     const std::string& outcome) {
  const int n = static_cast<int>(x.rows());
  const int k = fit.k;
  PrincipalScoreTable table;
  table.outcome = outcome;
  table.scores.resize(n, k + 2);
  const Eigen::VectorXd xa = x * fit.alpha;
  for (int i = 0; i < n; ++i) {
    // survivor(r) = Pr(Y(r)=1 | x) for r = 0..k
    double prev = 1.0;
    for (int r = 0; r <= k; ++r) {
      const double surv = norm_cdf(-fit.delta[r] + xa[i]);
      table.scores(i, r) = prev - surv;
      prev = surv;
    }
    table.scores(i, k + 1) = prev;
    double row_sum = 0.0;
    for (int r = 0; r <= k + 1; ++r) {
      const double raw = table.scores(i, r);
      if (raw < 0.0) {
        ++table.negative_raw_count;
        table.most_negative_raw = std::min(table.most_negative_raw, raw);
        table.scores(i, r) = 0.0;
      }
      row_sum += table.scores(i, r);
    }
    table.scores.row(i) /= row_sum;
  }
  return table;
}

double hajek_apce(const Dataset& ds, const PrincipalScoreTable& scores, int r,
                  const DecisionTarget& target) {
  if (r < 0 || r >= scores.strata()) throw ValidationError("stratum index outside 0..k+1");
  if (scores.n() != ds.n()) throw ValidationError("score table / dataset size mismatch");
  double num[2] = {0.0, 0.0};
  double den[2] = {0.0, 0.0};
  for (int i = 0; i < ds.n(); ++i) {
    const CaseRecord& rec = ds.records[i];
    const double w = scores.scores(i, r);
    const bool event =
        target.threshold ? (rec.d >= target.value) : (rec.d == target.value);
    num[rec.z] += w * (event ? 1.0 : 0.0);
    den[rec.z] += w;
  }
  if (den[0] < 1e-10 || den[1] < 1e-10)
    throw NumericalError("degenerate stratum: arm weight sum vanishes (r=" +
                         std::to_string(r) + ")");
  return num[1] / den[1] - num[0] / den[0];
}

namespace {

Dataset resample_stratified(const Dataset& ds, const std::vector<int>& a0,
                            const std::vector<int>& a1, RngStream& rng) {
  Dataset out;
  out.scale = ds.scale;
  out.covariate_names = ds.covariate_names;
  out.outcome_names = ds.outcome_names;
  out.records.reserve(ds.records.size());
  for (std::size_t i = 0; i < a0.size(); ++i)
    out.records.push_back(ds.records[a0[rng.below(a0.size())]]);
  for (std::size_t i = 0; i < a1.size(); ++i)
    out.records.push_back(ds.records[a1[rng.below(a1.size())]]);
  // resampling duplicates ids; keep them unique for downstream validation
  for (std::size_t i = 0; i < out.records.size(); ++i)
    out.records[i].case_id = "b" + std::to_string(i);
  return out;
}

}  // namespace

BootstrapInterval bootstrap_ci(const Dataset& ds,
                               const std::function<double(const Dataset&)>& statistic, int b,
                               std::uint64_t seed, int threads) {
  if (b < 100) throw ValidationError("bootstrap needs B >= 100");
  const std::vector<int> a0 = ds.arm_indices(0);
  const std::vector<int> a1 = ds.arm_indices(1);
  if (a0.empty() || a1.empty()) throw ValidationError("bootstrap needs both arms non-empty");

  RngStream root(seed);
  std::vector<std::optional<double>> reps(b);
  auto run_range = [&](int lo, int hi) {
    for (int rep = lo; rep < hi; ++rep) {
      RngStream rng = root.substream(static_cast<std::uint64_t>(rep));
      try {
        const Dataset boot = resample_stratified(ds, a0, a1, rng);
        const double v = statistic(boot);
        if (std::isfinite(v)) reps[rep] = v;
      } catch (const std::exception&) {
        // counted below as a replicate failure
      }
    }
  };
  threads = std::max(1, std::min(threads, b));
  if (threads == 1) {
    run_range(0, b);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (b + threads - 1) / threads;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(run_range, t * chunk, std::min(b, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  }

  std::vector<double> ok;
  for (const auto& r : reps)
    if (r) ok.push_back(*r);
  const int failures = b - static_cast<int>(ok.size());
  if (failures * 10 > b)
    throw NumericalError("bootstrap replicate failure rate above 10% (" +
                         std::to_string(failures) + "/" + std::to_string(b) + ")");
  std::sort(ok.begin(), ok.end());
  auto pct = [&](double q) {
    const double pos = q * (static_cast<double>(ok.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, ok.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * ok[lo] + w * ok[hi];
  };
  return {pct(0.025), pct(0.975), failures};
}

BinaryIpwResult apce_binary_ipw(const Dataset& ds, const Eigen::VectorXd& p_y1_given_d1,
                                const Eigen::VectorXd& p_y1_given_d0, int dichotomize_at) {
  const int n = ds.n();
  if (p_y1_given_d1.size() != n || p_y1_given_d0.size() != n)
    throw ValidationError("probability vectors must match dataset size");

  BinaryIpwResult res;
  res.min_ep = 1.0;
  double num[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  double den[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  for (int i = 0; i < n; ++i) {
    const double e_r = p_y1_given_d1[i];
    const double e_s = 1.0 - p_y1_given_d0[i];
    // kept unclipped: a negative weight flags the violation while leaving
    // the estimate computable
    const double e_p = p_y1_given_d0[i] - p_y1_given_d1[i];
    res.min_ep = std::min(res.min_ep, e_p);
    const double w[3] = {e_p, e_r, e_s};
    const int z = ds.records[i].z;
    const double harsh = (ds.records[i].d >= dichotomize_at) ? 1.0 : 0.0;
    // the safe-stratum effect targets the lenient event
    const double event[3] = {harsh, harsh, 1.0 - harsh};
    for (int j = 0; j < 3; ++j) {
      num[j][z] += w[j] * event[j];
      den[j][z] += w[j];
    }
  }
  res.testable_violation = res.min_ep < 0.0;
  auto contrast = [&](int j) {
    if (std::abs(den[j][0]) < 1e-10 || std::abs(den[j][1]) < 1e-10)
      throw NumericalError("degenerate stratum in binary weighting path");
    return num[j][1] / den[j][1] - num[j][0] / den[j][0];
  };
  res.apcep = contrast(0);
  res.apcer = contrast(1);
  res.apces = contrast(2);
  return res;
}

BinaryIpwResult apce_binary_ipw(const Dataset& ds, const ProbitFit& binary_fit,
                                const Eigen::MatrixXd& x, int dichotomize_at) {
  if (binary_fit.k != 1)
    throw ValidationError("binary weighting path expects a k=1 outcome fit");
  const int n = ds.n();
  Eigen::VectorXd p1(n), p0(n);
  for (int i = 0; i < n; ++i) {
    p1[i] = binary_fit.prob_y1(x.row(i).transpose(), 1);
    p0[i] = binary_fit.prob_y1(x.row(i).transpose(), 0);
  }
  return apce_binary_ipw(ds, p1, p0, dichotomize_at);
}

}  // namespace apce
