#include "apce/nonparam.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "apce/errors.hpp"
#include "apce/rng.hpp"

namespace apce {

namespace {

double arm_mean(const Dataset& ds, const std::vector<int>& idx,
                const std::vector<char>& indicator) {
  double s = 0.0;
  for (int i : idx) s += indicator[i];
  return s / static_cast<double>(idx.size());
}

std::vector<char> target_indicator(const Dataset& ds, const IttTarget& t) {
  std::vector<char> v(ds.n());
  if (t.is_outcome) {
    const int j = ds.outcome_index(t.outcome);
    for (int i = 0; i < ds.n(); ++i) v[i] = static_cast<char>(ds.records[i].outcomes[j]);
  } else {
    for (int i = 0; i < ds.n(); ++i) v[i] = static_cast<char>(ds.records[i].d == t.category);
  }
  return v;
}

// Joint cell proportions within an arm for a dichotomized decision.
struct ArmCells {
  double p_y1;      // Pr(Y=1 | Z=z)
  double p_d1_y1;   // Pr(D=1, Y=1 | Z=z)
  double p_d0_y0;   // Pr(D=0, Y=0 | Z=z)
  double p_d0_y1;   // Pr(D=0, Y=1 | Z=z)
};

ArmCells arm_cells(const std::vector<int>& d, const std::vector<int>& y,
                   const std::vector<int>& idx, int threshold) {
  ArmCells c{0, 0, 0, 0};
  for (int i : idx) {
    const int db = d[i] >= threshold ? 1 : 0;
    c.p_y1 += y[i];
    c.p_d1_y1 += (db == 1 && y[i] == 1);
    c.p_d0_y0 += (db == 0 && y[i] == 0);
    c.p_d0_y1 += (db == 0 && y[i] == 1);
  }
  const double n = static_cast<double>(idx.size());
  c.p_y1 /= n;
  c.p_d1_y1 /= n;
  c.p_d0_y0 /= n;
  c.p_d0_y1 /= n;
  return c;
}

void require_both_arms(const std::vector<int>& a0, const std::vector<int>& a1) {
  if (a0.empty()) throw ValidationError("arm empty: z=0");
  if (a1.empty()) throw ValidationError("arm empty: z=1");
}

std::vector<int> resample_arm(const std::vector<int>& idx, RngStream& rng) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[i] = idx[rng.below(idx.size())];
  return out;
}

}  // namespace

IttEstimate diff_in_means_itt(const Dataset& ds, const IttTarget& target) {
  const std::vector<int> a0 = ds.arm_indices(0);
  const std::vector<int> a1 = ds.arm_indices(1);
  require_both_arms(a0, a1);
  const std::vector<char> v = target_indicator(ds, target);
  const double m1 = arm_mean(ds, a1, v);
  const double m0 = arm_mean(ds, a0, v);
  const double se = std::sqrt(m1 * (1.0 - m1) / static_cast<double>(a1.size()) +
                              m0 * (1.0 - m0) / static_cast<double>(a0.size()));
  IttEstimate est;
  est.target = target.label();
  est.diff = m1 - m0;
  est.ci_low = est.diff - 1.959963984540054 * se;
  est.ci_high = est.diff + 1.959963984540054 * se;
  est.n1 = static_cast<int>(a1.size());
  est.n0 = static_cast<int>(a0.size());
  return est;
}

std::vector<SignEntry> apce_sign_table(const Dataset& ds, const std::string& outcome,
                                       int dichotomize_at, int bootstrap_b,
                                       std::uint64_t seed) {
  if (dichotomize_at < 1 || dichotomize_at > ds.scale.k)
    throw ValidationError("dichotomize_at must lie in 1..k");
  const std::vector<int> a0 = ds.arm_indices(0);
  const std::vector<int> a1 = ds.arm_indices(1);
  require_both_arms(a0, a1);
  const std::vector<int> y = ds.outcome_column(outcome);
  std::vector<int> d(ds.n());
  for (int i = 0; i < ds.n(); ++i) d[i] = ds.records[i].d;

  auto numerators = [&](const std::vector<int>& i0, const std::vector<int>& i1) {
    const ArmCells c0 = arm_cells(d, y, i0, dichotomize_at);
    const ArmCells c1 = arm_cells(d, y, i1, dichotomize_at);
    return std::array<double, 3>{c0.p_y1 - c1.p_y1, c1.p_d1_y1 - c0.p_d1_y1,
                                 c0.p_d0_y0 - c1.p_d0_y0};
  };

  const std::array<double, 3> point = numerators(a0, a1);
  std::array<std::vector<double>, 3> boots;
  RngStream root(seed);
  for (int b = 0; b < bootstrap_b; ++b) {
    RngStream r = root.substream(static_cast<std::uint64_t>(b));
    const std::array<double, 3> rep = numerators(resample_arm(a0, r), resample_arm(a1, r));
    for (int j = 0; j < 3; ++j) boots[j].push_back(rep[j]);
  }

  auto pct = [](std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * v[lo] + w * v[hi];
  };

  const char* names[3] = {"APCEp", "APCEr", "APCEs"};
  std::vector<SignEntry> out;
  for (int j = 0; j < 3; ++j) {
    SignEntry e;
    e.effect = names[j];
    e.numerator = point[j];
    e.sign = (point[j] > 0.0) - (point[j] < 0.0);
    if (bootstrap_b > 0) {
      e.ci_low = pct(boots[j], 0.025);
      e.ci_high = pct(boots[j], 0.975);
    }
    out.push_back(e);
  }
  return out;
}

std::pair<BoundsEstimate, BoundsEstimate> potential_outcome_bounds(const Dataset& ds,
                                                                   const std::string& outcome,
                                                                   int dichotomize_at) {
  if (dichotomize_at < 1 || dichotomize_at > ds.scale.k)
    throw ValidationError("dichotomize_at must lie in 1..k");
  const std::vector<int> a0 = ds.arm_indices(0);
  const std::vector<int> a1 = ds.arm_indices(1);
  require_both_arms(a0, a1);
  const std::vector<int> y = ds.outcome_column(outcome);
  std::vector<int> d(ds.n());
  for (int i = 0; i < ds.n(); ++i) d[i] = ds.records[i].d;
  const ArmCells c0 = arm_cells(d, y, a0, dichotomize_at);
  const ArmCells c1 = arm_cells(d, y, a1, dichotomize_at);

  BoundsEstimate y1;
  y1.target = "Pr{Y(1)=1}";
  y1.lower = std::max(c0.p_d1_y1, c1.p_d1_y1);
  y1.upper = std::min(c0.p_y1, c1.p_y1);
  BoundsEstimate y0;
  y0.target = "Pr{Y(0)=1}";
  y0.lower = std::max(c0.p_y1, c1.p_y1);
  y0.upper = 1.0 - std::max(c0.p_d0_y0, c1.p_d0_y0);
  if (y1.lower > y1.upper || y0.lower > y0.upper)
    throw NumericalError("bounds crossed: data inconsistent with monotonicity");
  return {y1, y0};
}

StrongMonoEstimate apce_strong_mono(const Dataset& ds, const std::string& outcome,
                                    int dichotomize_at, double pr_y0_low, double pr_y0_high) {
  if (dichotomize_at < 1 || dichotomize_at > ds.scale.k)
    throw ValidationError("dichotomize_at must lie in 1..k");
  if (pr_y0_low > pr_y0_high) std::swap(pr_y0_low, pr_y0_high);
  if (pr_y0_low <= 0.0 || pr_y0_high >= 1.0)
    throw NumericalError("Pr{Y(0)=1} must lie strictly inside (0,1)");
  const std::vector<int> a0 = ds.arm_indices(0);
  const std::vector<int> a1 = ds.arm_indices(1);
  require_both_arms(a0, a1);
  const std::vector<int> y = ds.outcome_column(outcome);
  std::vector<int> d(ds.n());
  for (int i = 0; i < ds.n(); ++i) d[i] = ds.records[i].d;
  const ArmCells c0 = arm_cells(d, y, a0, dichotomize_at);
  const ArmCells c1 = arm_cells(d, y, a1, dichotomize_at);

  const double num_p = c0.p_d0_y1 - c1.p_d0_y1;
  const double num_s = c0.p_d0_y0 - c1.p_d0_y0;

  // numerator/denominator is monotone in the denominator, so interval
  // endpoints map to interval endpoints
  const double p_at_lo = num_p / pr_y0_low;
  const double p_at_hi = num_p / pr_y0_high;
  const double s_at_lo = num_s / (1.0 - pr_y0_low);
  const double s_at_hi = num_s / (1.0 - pr_y0_high);

  StrongMonoEstimate est;
  est.apcep_low = std::min(p_at_lo, p_at_hi);
  est.apcep_high = std::max(p_at_lo, p_at_hi);
  est.apces_low = std::min(s_at_lo, s_at_hi);
  est.apces_high = std::max(s_at_lo, s_at_hi);
  return est;
}

}  // namespace apce
