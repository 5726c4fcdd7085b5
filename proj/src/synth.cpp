#include "apce/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "apce/errors.hpp"
#include "apce/rng.hpp"

namespace apce {

namespace {

int threshold_count(double v, const Eigen::VectorXd& cuts) {
  int c = 0;
  for (int j = 0; j < cuts.size(); ++j)
    if (v > cuts[j]) ++c;
  return c;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void DgpSpec::validate() const {
  if (n < 1 || p < 1 || k < 1) throw ValidationError("n, p, k must be positive");
  if (beta.size() != 2 * p + 1) throw ValidationError("beta must have length 2p+1");
  if (alpha.size() != p) throw ValidationError("alpha must have length p");
  if (theta.rows() != 2 || theta.cols() != k) throw ValidationError("theta must be 2 x k");
  if (delta.size() != k + 1) throw ValidationError("delta must have length k+1");
  for (int z = 0; z < 2; ++z)
    for (int j = 1; j < k; ++j)
      if (!(theta(z, j) > theta(z, j - 1)))
        throw ValidationError("cutpoints must be strictly increasing");
  for (int j = 1; j <= k; ++j)
    if (delta[j] < delta[j - 1]) throw ValidationError("delta must be nondecreasing");
  if (std::abs(rho) >= 1.0) throw ValidationError("|rho| must be below 1");
  if (!covariate_laws.empty() && static_cast<int>(covariate_laws.size()) != p)
    throw ValidationError("covariate law list must have length p");
}

std::pair<Dataset, OracleTruth> synth_generate(const DgpSpec& spec) {
  spec.validate();
  RngStream rng(spec.seed);
  RngStream cov_rng = rng.substream(1);
  RngStream err_rng = rng.substream(2);
  RngStream arm_rng = rng.substream(3);
  RngStream attr_rng = rng.substream(4);

  Dataset ds;
  ds.scale = DecisionScale::with_default_labels(spec.k);
  ds.outcome_names = {"y"};
  for (int j = 0; j < spec.p; ++j) ds.covariate_names.push_back("x" + std::to_string(j + 1));

  OracleTruth truth;
  truth.r.resize(spec.n);
  truth.d0.resize(spec.n);
  truth.d1.resize(spec.n);
  truth.stratum_proportions.assign(spec.k + 2, 0.0);

  const double s = std::sqrt(1.0 - spec.rho * spec.rho);
  for (int i = 0; i < spec.n; ++i) {
    CaseRecord rec;
    rec.case_id = "s" + std::to_string(i + 1);
    Eigen::VectorXd x(spec.p);
    for (int j = 0; j < spec.p; ++j) {
      bool coin = !spec.covariate_laws.empty() && spec.covariate_laws[j] == CovariateLaw::Coin;
      x[j] = coin ? (cov_rng.bernoulli(0.5) ? 1.0 : 0.0) : cov_rng.normal();
      rec.covariates.push_back(x[j]);
      rec.covariates_raw.push_back(fmt(x[j]));
    }

    // shared decision error across arms gives well-defined joint potential
    // decisions; only the mean shifts with z
    double e1 = err_rng.normal();
    double e2 = spec.rho * e1 + s * err_rng.normal();

    double base = x.dot(spec.beta.segment(1, spec.p));
    double shift = spec.beta[0] + x.dot(spec.beta.segment(1 + spec.p, spec.p));
    double dstar0 = base + e1;
    double dstar1 = base + shift + e1;
    double rstar = x.dot(spec.alpha) + e2;

    truth.d0[i] = threshold_count(dstar0, spec.theta.row(0).transpose());
    truth.d1[i] = threshold_count(dstar1, spec.theta.row(1).transpose());
    truth.r[i] = threshold_count(rstar, spec.delta);
    truth.stratum_proportions[truth.r[i]] += 1.0;

    rec.z = arm_rng.bernoulli(0.5) ? 1 : 0;
    rec.d = rec.z == 1 ? truth.d1[i] : truth.d0[i];
    rec.outcomes.push_back(truth.r[i] > rec.d ? 1 : 0);
    rec.attribute = spec.attribute_split > 0.0
                        ? (attr_rng.bernoulli(spec.attribute_split) ? "b" : "a")
                        : "all";
    if (spec.hearing_dates > 0) rec.hearing_order = 1 + i % spec.hearing_dates;
    ds.records.push_back(std::move(rec));
  }
  for (double& v : truth.stratum_proportions) v /= spec.n;
  return {std::move(ds), std::move(truth)};
}

OracleApce oracle_apce(const OracleTruth& truth, int k) {
  const int n = static_cast<int>(truth.r.size());
  OracleApce out;
  out.apce = Eigen::MatrixXd::Constant(k + 1, k + 2,
                                       std::numeric_limits<double>::quiet_NaN());
  out.apcep.assign(k, std::numeric_limits<double>::quiet_NaN());
  out.empty_stratum.assign(k + 2, false);
  out.stratum_proportions.assign(k + 2, 0.0);

  std::vector<double> count(k + 2, 0.0);
  std::vector<std::vector<double>> n1(k + 2, std::vector<double>(k + 1, 0.0));
  std::vector<std::vector<double>> n0(k + 2, std::vector<double>(k + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    int r = truth.r[i];
    count[r] += 1.0;
    n1[r][truth.d1[i]] += 1.0;
    n0[r][truth.d0[i]] += 1.0;
  }
  for (int r = 0; r <= k + 1; ++r) {
    out.stratum_proportions[r] = count[r] / n;
    if (count[r] == 0.0) {
      out.empty_stratum[r] = true;
      continue;
    }
    for (int d = 0; d <= k; ++d)
      out.apce(d, r) = (n1[r][d] - n0[r][d]) / count[r];
    if (r >= 1 && r <= k) {
      double num = 0.0;
      for (int d = r; d <= k; ++d) num += n1[r][d] - n0[r][d];
      out.apcep[r - 1] = num / count[r];
    }
  }
  out.apces = out.empty_stratum[0] ? std::numeric_limits<double>::quiet_NaN()
                                   : out.apce(0, 0);
  return out;
}

double oracle_fairness_delta(const OracleTruth& truth, const std::vector<std::string>& attrs,
                             int r, int z, int k) {
  std::map<std::string, std::vector<int>> groups;
  for (size_t i = 0; i < attrs.size(); ++i)
    if (truth.r[i] == r) groups[attrs[i]].push_back(static_cast<int>(i));
  if (groups.size() < 2) throw ValidationError("need two non-empty groups within the stratum");
  double best = 0.0;
  for (int d = 1; d <= k; ++d) {
    std::vector<double> probs;
    for (auto& [label, idx] : groups) {
      double c = 0.0;
      for (int i : idx) {
        int dec = z == 1 ? truth.d1[i] : truth.d0[i];
        if (dec >= d) c += 1.0;
      }
      probs.push_back(c / static_cast<double>(idx.size()));
    }
    for (size_t a = 0; a < probs.size(); ++a)
      for (size_t b = a + 1; b < probs.size(); ++b)
        best = std::max(best, std::abs(probs[a] - probs[b]));
  }
  return best;
}

Dataset reference_trial_dataset() {
  // per (z, d) cell: total rows and 1-counts for each outcome; within a cell
  // the first c rows carry a 1, independently per outcome (only marginals
  // are published, and every downstream statistic depends only on marginals)
  struct Cell {
    int z, d, n, fta, nca, nvca;
  };
  const Cell cells[] = {
      {0, 0, 705, 218, 211, 36}, {0, 1, 132, 42, 39, 10}, {0, 2, 106, 16, 14, 3},
      {1, 0, 705, 221, 202, 44}, {1, 1, 130, 45, 40, 10}, {1, 2, 113, 16, 17, 6},
  };
  Dataset ds;
  ds.scale = DecisionScale::with_default_labels(2);
  ds.outcome_names = {"fta", "nca", "nvca"};
  int row = 0;
  for (const Cell& c : cells) {
    for (int i = 0; i < c.n; ++i) {
      CaseRecord rec;
      rec.case_id = "t" + std::to_string(++row);
      rec.z = c.z;
      rec.d = c.d;
      rec.outcomes = {i < c.fta ? 1 : 0, i < c.nca ? 1 : 0, i < c.nvca ? 1 : 0};
      rec.attribute = "all";
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

void emit_oracle_csv(const Dataset& ds, const OracleTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "case_id,r,d0,d1\n";
  for (int i = 0; i < ds.n(); ++i)
    out << ds.records[i].case_id << ',' << truth.r[i] << ',' << truth.d0[i] << ','
        << truth.d1[i] << '\n';
}

}  // namespace apce
