#include "apce/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "apce/errors.hpp"
#include "apce/normal.hpp"

namespace apce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Groups {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> members;
};

Groups split_groups(const std::vector<std::string>& attributes) {
  std::map<std::string, std::vector<int>> by;
  for (int i = 0; i < static_cast<int>(attributes.size()); ++i)
    by[attributes[i]].push_back(i);
  if (by.size() < 2) throw ValidationError("need at least two attribute groups");
  Groups g;
  for (auto& [label, idx] : by) {
    g.labels.push_back(label);
    g.members.push_back(std::move(idx));
  }
  return g;
}

std::pair<double, double> central_interval(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto q = [&](double u) {
    double pos = u * (static_cast<double>(v.size()) - 1.0);
    int lo = static_cast<int>(std::floor(pos));
    int hi = std::min(lo + 1, static_cast<int>(v.size()) - 1);
    double f = pos - lo;
    return (1.0 - f) * v[lo] + f * v[hi];
  };
  return {q(0.025), q(0.975)};
}

// per-group, per-draw: Pr(D(z) >= d | A=a, R=r) for d = 1..k
struct DrawGaps {
  double delta = 0.0;
  int argmax_d = 1;
  int argmax_a = 0, argmax_b = 1;
};

DrawGaps draw_delta(const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha,
                    const Eigen::VectorXd& theta, const Eigen::VectorXd& delta, double rho,
                    const Eigen::MatrixXd& x, const Groups& groups, int r, int z, int k) {
  const int p = static_cast<int>(x.cols());
  const int ng = static_cast<int>(groups.labels.size());
  // cond(g, d-1) = Pr(D(z) >= d | A=g, R=r)
  Eigen::MatrixXd cond(ng, k);
  for (int g = 0; g < ng; ++g) {
    Eigen::VectorXd joint_ge = Eigen::VectorXd::Zero(k);  // E[Pr(D>=d, R=r | X)]
    double mass_r = 0.0;                                  // E[Pr(R=r | X)]
    for (int i : groups.members[g]) {
      double mr = x.row(i).dot(alpha);
      double rl = r == 0 ? -kInf : delta[r - 1] - mr;
      double rh = r == k + 1 ? kInf : delta[r] - mr;
      double prr = (std::isfinite(rh) ? norm_cdf(rh) : 1.0) -
                   (std::isfinite(rl) ? norm_cdf(rl) : 0.0);
      mass_r += std::max(prr, 0.0);
      double mdz = beta[0] * z + x.row(i).dot(beta.segment(1, p)) +
                   z * x.row(i).dot(beta.segment(1 + p, p));
      for (int d = 1; d <= k; ++d) {
        double dl = theta[d - 1] - mdz;
        if (rho == 0.0) {
          joint_ge[d - 1] += norm_sf(dl) * std::max(prr, 0.0);
        } else {
          joint_ge[d - 1] += bvn_rect(dl, kInf, rl, rh, rho);
        }
      }
    }
    double den = std::max(mass_r, 1e-12);
    for (int d = 1; d <= k; ++d) cond(g, d - 1) = joint_ge[d - 1] / den;
  }
  DrawGaps out;
  for (int a = 0; a < ng; ++a)
    for (int b = a + 1; b < ng; ++b)
      for (int d = 1; d <= k; ++d) {
        double gap = std::abs(cond(a, d - 1) - cond(b, d - 1));
        if (gap > out.delta) {
          out.delta = gap;
          out.argmax_d = d;
          out.argmax_a = a;
          out.argmax_b = b;
        }
      }
  return out;
}

}  // namespace

FairnessDelta fairness_delta(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                             const std::vector<std::string>& attributes, int r, int z,
                             const std::string& outcome) {
  if (static_cast<int>(attributes.size()) != x.rows())
    throw ValidationError("attribute vector length does not match design");
  if (r < 0 || r > draws.k + 1) throw ValidationError("stratum index out of range");
  Groups groups = split_groups(attributes);

  FairnessDelta out;
  out.stratum = r;
  out.z = z;
  out.outcome = outcome;
  std::map<std::tuple<int, int, int>, int> arg_counts;
  for (int c = 0; c < draws.chains(); ++c) {
    for (int t = 0; t < draws.retained_per_chain(); ++t) {
      Eigen::VectorXd theta =
          z == 1 ? draws.theta1[c].row(t).transpose() : draws.theta0[c].row(t).transpose();
      DrawGaps g = draw_delta(draws.beta[c].row(t).transpose(),
                              draws.alpha[c].row(t).transpose(), theta,
                              draws.delta[c].row(t).transpose(), draws.rho, x, groups, r, z,
                              draws.k);
      out.draw_values.push_back(g.delta);
      arg_counts[{g.argmax_a, g.argmax_b, g.argmax_d}]++;
    }
  }
  out.delta = std::accumulate(out.draw_values.begin(), out.draw_values.end(), 0.0) /
              static_cast<double>(out.draw_values.size());
  auto ci = central_interval(out.draw_values);
  out.ci_low = ci.first;
  out.ci_high = ci.second;
  auto best = std::max_element(arg_counts.begin(), arg_counts.end(),
                               [](const auto& l, const auto& r2) { return l.second < r2.second; });
  out.argmax_a = groups.labels[std::get<0>(best->first)];
  out.argmax_a_prime = groups.labels[std::get<1>(best->first)];
  out.argmax_d = std::get<2>(best->first);
  return out;
}

FairnessDeltaDiff fairness_delta_diff(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                                      const std::vector<std::string>& attributes, int r,
                                      const std::string& outcome) {
  FairnessDeltaDiff out;
  out.stratum = r;
  out.with_provision = fairness_delta(draws, x, attributes, r, 1, outcome);
  out.without_provision = fairness_delta(draws, x, attributes, r, 0, outcome);
  const auto& a = out.with_provision.draw_values;
  const auto& b = out.without_provision.draw_values;
  std::vector<double> diffs(a.size());
  for (size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
  out.diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
  auto ci = central_interval(diffs);
  out.ci_low = ci.first;
  out.ci_high = ci.second;
  return out;
}

}  // namespace apce
