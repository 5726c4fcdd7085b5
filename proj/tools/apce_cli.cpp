// command-line front end: every subcommand reads explicit inputs, writes CSV
// and JSON artifacts into --out, and records a manifest with the config hash
// and seed so runs are reproducible byte for byte

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "apce/data.hpp"
#include "apce/encode.hpp"
#include "apce/errors.hpp"
#include "apce/fairness.hpp"
#include "apce/gibbs.hpp"
#include "apce/nonparam.hpp"
#include "apce/normal.hpp"
#include "apce/outcome_models.hpp"
#include "apce/policy.hpp"
#include "apce/serialize.hpp"
#include "apce/spillover.hpp"
#include "apce/strata.hpp"
#include "apce/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace apce;

namespace {

std::string g_out = ".";

std::string art(const std::string& name) { return (fs::path(g_out) / name).string(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::ofstream open_csv(const std::string& name) {
  std::ofstream out(art(name));
  if (!out) throw ValidationError("cannot open " + art(name) + " for writing");
  return out;
}

CsvSchema schema_from_json(const json& j) {
  CsvSchema s;
  s.case_id = j.value("case_id", "");
  s.z = j.at("z").get<std::string>();
  s.d = j.at("d").get<std::string>();
  for (auto& [name, col] : j.at("outcomes").items())
    s.outcomes.emplace_back(name, col.get<std::string>());
  if (j.contains("covariates"))
    s.covariates = j.at("covariates").get<std::vector<std::string>>();
  s.attribute = j.value("attribute", "");
  s.hearing_order = j.value("hearing_order", "");
  s.dmf = j.value("dmf", "");
  return s;
}

struct DataArgs {
  std::string input;
  std::string schema;
  int k = 1;

  Dataset load() const {
    if (input == "builtin:reference") return reference_trial_dataset();
    if (schema.empty())
      throw ValidationError("--schema is required unless --input is builtin:reference");
    if (!fs::exists(input)) throw ValidationError("input file does not exist: " + input);
    if (!fs::exists(schema)) throw ValidationError("schema file does not exist: " + schema);
    return ingest_csv(input, schema_from_json(read_json(schema)),
                      DecisionScale::with_default_labels(k));
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--input", input, "input CSV, or builtin:reference")->required();
    cmd->add_option("--schema", schema, "JSON column mapping");
    cmd->add_option("--k", k, "number of non-lenient decision categories");
  }
};

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    // a:b:step expands inclusively
    auto c1 = tok.find(':');
    if (c1 != std::string::npos) {
      auto c2 = tok.find(':', c1 + 1);
      if (c2 == std::string::npos) throw ValidationError("grid ranges need lo:hi:step");
      double lo = std::stod(tok.substr(0, c1));
      double hi = std::stod(tok.substr(c1 + 1, c2 - c1 - 1));
      double step = std::stod(tok.substr(c2 + 1));
      if (step <= 0.0) throw ValidationError("grid step must be positive");
      for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
    } else {
      out.push_back(std::stod(tok));
    }
  }
  if (out.empty()) throw ValidationError("empty grid");
  return out;
}

// subset expressions: "dmf=1", "attribute=b", or "all"
std::vector<int> parse_subset(const Dataset& ds, const std::string& expr) {
  std::vector<int> idx;
  if (expr.empty() || expr == "all") {
    idx.resize(ds.n());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  auto eq = expr.find('=');
  if (eq == std::string::npos) throw ValidationError("subset must be field=value or all");
  std::string field = expr.substr(0, eq), value = expr.substr(eq + 1);
  for (int i = 0; i < ds.n(); ++i) {
    const auto& r = ds.records[i];
    bool hit = false;
    if (field == "attribute") {
      hit = r.attribute == value;
    } else if (field == "dmf") {
      hit = r.dmf && std::to_string(*r.dmf) == value;
    } else if (field == "z") {
      hit = std::to_string(r.z) == value;
    } else {
      throw ValidationError("unknown subset field: " + field);
    }
    if (hit) idx.push_back(i);
  }
  if (idx.empty()) throw ValidationError("subset matched no cases: " + expr);
  return idx;
}

PrincipalScoreTable scores_for(const Dataset& ds, const std::string& outcome) {
  DesignMatrix dm = numeric_design(ds);
  ProbitFit fit = fit_outcome_probit(ds, outcome, dm.x);
  return principal_scores(fit, dm.x, outcome);
}

void manifest(const std::string& command, const json& config, std::uint64_t seed) {
  write_manifest(art("manifest.json"), command, config, seed);
}

int run_ingest(const DataArgs& da) {
  Dataset ds = da.load();
  auto report = validate_dataset(ds);
  if (!report.empty()) {
    std::string msg;
    for (const auto& r : report) msg += r + "; ";
    throw ValidationError(msg);
  }
  emit_csv(ds, art("dataset.csv"));
  manifest("ingest", {{"input", da.input}, {"k", ds.scale.k}, {"n", ds.n()}}, 0);
  return 0;
}

int run_itt(const DataArgs& da) {
  Dataset ds = da.load();
  auto out = open_csv("itt.csv");
  out << "target,estimate,ci_low,ci_high,n1,n0\n";
  auto emit = [&](const IttEstimate& e) {
    out << e.target << ',' << fmt(e.diff) << ',' << fmt(e.ci_low) << ',' << fmt(e.ci_high)
        << ',' << e.n1 << ',' << e.n0 << '\n';
  };
  for (int d = 0; d <= ds.scale.k; ++d) emit(diff_in_means_itt(ds, IttTarget::for_decision(d)));
  for (const auto& y : ds.outcome_names) emit(diff_in_means_itt(ds, IttTarget::for_outcome(y)));
  manifest("itt", {{"input", da.input}}, 0);
  return 0;
}

int run_signs(const DataArgs& da, const std::string& outcome, int threshold, int b,
              std::uint64_t seed) {
  Dataset ds = da.load();
  auto rows = apce_sign_table(ds, outcome, threshold, b, seed);
  auto out = open_csv("signs.csv");
  out << "effect,numerator,sign,ci_low,ci_high\n";
  for (const auto& r : rows)
    out << r.effect << ',' << fmt(r.numerator) << ',' << r.sign << ',' << fmt(r.ci_low) << ','
        << fmt(r.ci_high) << '\n';
  manifest("signs", {{"input", da.input}, {"outcome", outcome}, {"threshold", threshold},
                     {"bootstrap", b}},
           seed);
  return 0;
}

int run_bounds(const DataArgs& da, const std::string& outcome, int threshold) {
  Dataset ds = da.load();
  auto [b1, b0] = potential_outcome_bounds(ds, outcome, threshold);
  json j = {{"treated", {{"target", b1.target}, {"lower", b1.lower}, {"upper", b1.upper}}},
            {"control", {{"target", b0.target}, {"lower", b0.lower}, {"upper", b0.upper}}}};
  write_json(art("bounds.json"), j);
  manifest("bounds", {{"input", da.input}, {"outcome", outcome}, {"threshold", threshold}}, 0);
  return 0;
}

int run_scores(const DataArgs& da, const std::string& outcome) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  ProbitFit fit = fit_outcome_probit(ds, outcome, dm.x);
  write_json(art("outcome_fit.json"), probit_fit_to_json(fit, dm.names));
  PrincipalScoreTable tab = principal_scores(fit, dm.x, outcome);
  auto out = open_csv("scores.csv");
  out << "case_id";
  for (int r = 0; r < tab.strata(); ++r) out << ",e" << r;
  out << '\n';
  for (int i = 0; i < tab.n(); ++i) {
    out << ds.records[i].case_id;
    for (int r = 0; r < tab.strata(); ++r) out << ',' << fmt(tab.scores(i, r));
    out << '\n';
  }
  manifest("scores", {{"input", da.input}, {"outcome", outcome},
                      {"clipped", tab.negative_raw_count}},
           0);
  return 0;
}

int run_apce_hajek(const DataArgs& da, const std::string& outcome, int b, std::uint64_t seed,
                   int threads) {
  Dataset ds = da.load();
  const int k = ds.scale.k;
  std::vector<ApceEstimate> rows;
  auto estimate = [&](int r, const DecisionTarget& tgt) {
    ApceEstimate e;
    e.stratum = r;
    e.decision = tgt.label();
    e.method = "hajek";
    e.outcome = outcome;
    e.point = hajek_apce(ds, scores_for(ds, outcome), r, tgt);
    auto ci = bootstrap_ci(
        ds, [&](const Dataset& d2) { return hajek_apce(d2, scores_for(d2, outcome), r, tgt); },
        b, seed + static_cast<std::uint64_t>(rows.size()), threads);
    e.ci_low = ci.ci_low;
    e.ci_high = ci.ci_high;
    rows.push_back(e);
  };
  for (int r = 1; r <= k; ++r) estimate(r, DecisionTarget::at_least(r));
  estimate(0, DecisionTarget::exactly(0));
  write_apce_csv(art("apce.csv"), rows);
  manifest("apce-hajek", {{"input", da.input}, {"outcome", outcome}, {"bootstrap", b}}, seed);
  return 0;
}

GibbsConfig gibbs_config(double rho, int chains, int iters, double burn, std::uint64_t seed,
                         int threads) {
  GibbsConfig cfg;
  cfg.rho = rho;
  cfg.chains = chains;
  cfg.iterations = iters;
  cfg.burn_fraction = burn;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

int run_gibbs(const DataArgs& da, const std::string& outcome, const GibbsConfig& cfg) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  PosteriorDraws draws = gibbs_run(ds, outcome, dm.x, cfg);
  write_json(art("draws.json"), draws_to_json(draws));
  auto rhat = gelman_rubin(draws);
  auto names = draws.parameter_names();
  auto out = open_csv("rhat.csv");
  out << "parameter,rhat\n";
  for (size_t i = 0; i < names.size(); ++i) out << names[i] << ',' << fmt(rhat[i]) << '\n';
  manifest("gibbs",
           {{"input", da.input},
            {"outcome", outcome},
            {"rho", cfg.rho},
            {"chains", cfg.chains},
            {"iters", cfg.iterations},
            {"burn", cfg.burn_fraction}},
           cfg.seed);
  return 0;
}

int run_apce_bayes(const DataArgs& da, const std::string& outcome, const std::string& draws_path,
                   const std::string& subset) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  PosteriorDraws draws = draws_from_json(read_json(draws_path));
  std::vector<int> idx = parse_subset(ds, subset);
  ApceSummary s = posterior_apce(draws, dm.x, outcome, &idx);
  write_apce_csv(art("apce.csv"), s.estimates);
  json props = json::array();
  for (double v : s.stratum_proportions) props.push_back(v);
  write_json(art("strata.json"), {{"proportions", props}});
  manifest("apce-bayes", {{"input", da.input}, {"outcome", outcome}, {"draws", draws_path},
                          {"subset", subset}},
           0);
  return 0;
}

int run_fairness(const DataArgs& da, const std::string& outcome, const std::string& draws_path,
                 const std::string& subset) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  PosteriorDraws draws = draws_from_json(read_json(draws_path));
  std::vector<int> idx = parse_subset(ds, subset);
  Eigen::MatrixXd x(idx.size(), dm.x.cols());
  std::vector<std::string> attrs;
  for (size_t j = 0; j < idx.size(); ++j) {
    x.row(static_cast<int>(j)) = dm.x.row(idx[j]);
    attrs.push_back(ds.records[idx[j]].attribute);
  }
  auto out = open_csv("fairness.csv");
  out << "outcome,stratum,z,delta_mean,lo,hi,argmax_a,argmax_a_prime,argmax_d\n";
  for (int r = 0; r <= draws.k + 1; ++r) {
    for (int z = 0; z < 2; ++z) {
      FairnessDelta fd = fairness_delta(draws, x, attrs, r, z, outcome);
      out << outcome << ',' << r << ',' << z << ',' << fmt(fd.delta) << ',' << fmt(fd.ci_low)
          << ',' << fmt(fd.ci_high) << ',' << fd.argmax_a << ',' << fd.argmax_a_prime << ','
          << fd.argmax_d << '\n';
    }
  }
  manifest("fairness", {{"input", da.input}, {"outcome", outcome}, {"draws", draws_path},
                        {"subset", subset}},
           0);
  return 0;
}

int run_policy_rule(const DataArgs& da, const std::string& outcome, double c0, double c1) {
  Dataset ds = da.load();
  PrincipalScoreTable tab = scores_for(ds, outcome);
  OptimalRule rule = optimal_rule(tab, {c0, c1});
  auto out = open_csv("rule.csv");
  out << "case_id,decision";
  for (int d = 0; d < rule.g.cols(); ++d) out << ",g" << d;
  out << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    out << ds.records[i].case_id << ',' << rule.decisions[i];
    for (int d = 0; d < rule.g.cols(); ++d) out << ',' << fmt(rule.g(i, d));
    out << '\n';
  }
  manifest("policy-rule", {{"input", da.input}, {"outcome", outcome}, {"c0", c0}, {"c1", c1}},
           0);
  return 0;
}

int run_policy_surface(const DataArgs& da, const std::string& outcome, const std::string& c0s,
                       const std::string& c1s, const std::string& subset) {
  Dataset ds = da.load();
  PrincipalScoreTable tab = scores_for(ds, outcome);
  std::vector<int> idx = parse_subset(ds, subset);
  UtilitySurface surf = optimal_share_grid(tab, parse_grid(c0s), parse_grid(c1s), idx);
  auto out = open_csv("surface.csv");
  out << "c0,c1,share\n";
  for (size_t a = 0; a < surf.c0_grid.size(); ++a)
    for (size_t b = 0; b < surf.c1_grid.size(); ++b)
      out << fmt(surf.c0_grid[a]) << ',' << fmt(surf.c1_grid[b]) << ','
          << fmt(surf.value(static_cast<int>(a), static_cast<int>(b))) << '\n';
  manifest("policy-surface", {{"input", da.input}, {"outcome", outcome}, {"c0_grid", c0s},
                              {"c1_grid", c1s}, {"subset", subset}},
           0);
  return 0;
}

int run_utility_compare(const DataArgs& da, const std::string& outcome, double c0, double c1,
                        int z) {
  Dataset ds = da.load();
  PrincipalScoreTable tab = scores_for(ds, outcome);
  // judge decisions in arm z vs dichotomized recommendations, same cases
  std::vector<int> idx;
  for (int i = 0; i < ds.n(); ++i)
    if (ds.records[i].z == z && ds.records[i].dmf) idx.push_back(i);
  if (idx.empty()) throw ValidationError("no cases with a recommendation in arm " +
                                         std::to_string(z));
  Eigen::MatrixXd sub(idx.size(), tab.strata());
  std::vector<int> judge, rec;
  for (size_t j = 0; j < idx.size(); ++j) {
    sub.row(static_cast<int>(j)) = tab.scores.row(idx[j]);
    judge.push_back(ds.records[idx[j]].d);
    rec.push_back(*ds.records[idx[j]].dmf > 0 ? 1 : 0);
  }
  PrincipalScoreTable stab = tab;
  stab.scores = sub;
  UtilitySpec spec{c0, c1};
  double u_judge = expected_utility(stab, judge, spec);
  double u_rec = expected_utility(stab, rec, spec);
  write_json(art("utility.json"), {{"judge", u_judge},
                                   {"recommendation", u_rec},
                                   {"difference", u_judge - u_rec},
                                   {"n", idx.size()}});
  manifest("utility-compare", {{"input", da.input}, {"outcome", outcome}, {"c0", c0},
                               {"c1", c1}, {"z", z}},
           0);
  return 0;
}

int run_provision(const DataArgs& da, const std::string& outcome) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  PrincipalScoreTable tab = scores_for(ds, outcome);
  // arm-specific ordinal fits give Pr(D=d | Z=z, x)
  std::array<Eigen::MatrixXd, 2> pd;
  for (int z = 0; z < 2; ++z) {
    auto arm = ds.arm_indices(z);
    std::vector<int> d;
    Eigen::MatrixXd xa(arm.size(), dm.x.cols());
    for (size_t j = 0; j < arm.size(); ++j) {
      d.push_back(ds.records[arm[j]].d);
      xa.row(static_cast<int>(j)) = dm.x.row(arm[j]);
    }
    OrdinalFit fit = fit_ordinal(d, xa, Link::Probit, ds.scale.k);
    pd[z].resize(ds.n(), ds.scale.k + 1);
    for (int i = 0; i < ds.n(); ++i)
      pd[z].row(i) = fit.category_probs(dm.x.row(i).transpose()).transpose();
  }
  ProvisionRule rule = optimal_provision(tab, pd[0], pd[1]);
  auto out = open_csv("provision.csv");
  out << "case_id,h0,h1,xi\n";
  for (int i = 0; i < ds.n(); ++i)
    out << ds.records[i].case_id << ',' << fmt(rule.h0[i]) << ',' << fmt(rule.h1[i]) << ','
        << rule.xi[i] << '\n';
  manifest("provision", {{"input", da.input}, {"outcome", outcome}}, 0);
  return 0;
}

int run_sensitivity(const DataArgs& da, const std::string& outcome, const std::string& rhos,
                    const GibbsConfig& base) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  auto grid = sensitivity_grid(ds, outcome, dm.x, base, parse_grid(rhos));
  auto out = open_csv("sensitivity.csv");
  out << "rho,outcome,stratum,decision,estimate,ci_low,ci_high\n";
  for (const auto& [rho, summary] : grid)
    for (const auto& e : summary.estimates)
      out << fmt(rho) << ',' << outcome << ',' << e.stratum << ',' << e.decision << ','
          << fmt(e.point) << ',' << fmt(e.ci_low) << ',' << fmt(e.ci_high) << '\n';
  manifest("sensitivity", {{"input", da.input}, {"outcome", outcome}, {"rho_grid", rhos},
                           {"chains", base.chains}, {"iters", base.iterations}},
           base.seed);
  return 0;
}

int run_np_sensitivity(const DataArgs& da, const std::string& outcome, double xi_off) {
  Dataset ds = da.load();
  DesignMatrix dm = numeric_design(ds);
  const int k = ds.scale.k;
  NpSensitivityInput in;
  in.k = k;
  for (int z = 0; z < 2; ++z) {
    auto arm = ds.arm_indices(z);
    std::vector<int> d, y;
    Eigen::MatrixXd xa(arm.size(), dm.x.cols());
    auto ycol = ds.outcome_column(outcome);
    for (size_t j = 0; j < arm.size(); ++j) {
      d.push_back(ds.records[arm[j]].d);
      y.push_back(ycol[arm[j]]);
      xa.row(static_cast<int>(j)) = dm.x.row(arm[j]);
    }
    ProbitFit yfit = fit_outcome_probit(y, d, xa, k);
    OrdinalFit dfit = fit_ordinal(d, xa, Link::Probit, k);
    in.p_y_given_zd[z].resize(ds.n(), k + 1);
    in.p_d_given_z[z].resize(ds.n(), k + 1);
    for (int i = 0; i < ds.n(); ++i) {
      for (int dd = 0; dd <= k; ++dd)
        in.p_y_given_zd[z](i, dd) = yfit.prob_y1(dm.x.row(i).transpose(), dd);
      in.p_d_given_z[z].row(i) = dfit.category_probs(dm.x.row(i).transpose()).transpose();
    }
    in.xi[z] = Eigen::MatrixXd::Constant(k + 1, k + 1, xi_off);
    in.xi[z].diagonal().setOnes();
  }
  auto tables = np_sensitivity(in);
  auto out = open_csv("np_sensitivity.csv");
  out << "z,d,stratum,prob\n";
  for (int z = 0; z < 2; ++z)
    for (int r = 0; r <= k + 1; ++r)
      for (int d = 0; d <= k; ++d)
        out << z << ',' << d << ',' << r << ',' << fmt(tables[z](d, r)) << '\n';
  manifest("np-sensitivity", {{"input", da.input}, {"outcome", outcome}, {"xi", xi_off}}, 0);
  return 0;
}

int run_crt(const DataArgs& da, int s, std::uint64_t seed, int threads) {
  Dataset ds = da.load();
  CrtResult res = crt_test(ds, s, seed, threads);
  write_json(art("crt.json"),
             {{"t_obs", res.t_obs}, {"p_value", res.p_value}, {"s", res.s}});
  auto out = open_csv("crt_null.csv");
  out << "t\n";
  for (double t : res.null_draws) out << fmt(t) << '\n';
  manifest("crt", {{"input", da.input}, {"s", s}}, seed);
  return 0;
}

int run_crt_power(const DataArgs& da, const std::string& omegas, int reps, int s,
                  std::uint64_t seed, int threads) {
  Dataset ds = da.load();
  auto pts = crt_power(ds, parse_grid(omegas), reps, s, seed, threads);
  auto out = open_csv("power.csv");
  out << "omega,power,reps\n";
  for (const auto& p : pts)
    out << fmt(p.omega) << ',' << fmt(p.power) << ',' << p.reps << '\n';
  manifest("crt-power", {{"input", da.input}, {"omega_grid", omegas}, {"reps", reps},
                         {"s", s}},
           seed);
  return 0;
}

Eigen::VectorXd parse_vec(const std::string& s) {
  auto g = parse_grid(s);
  Eigen::VectorXd v(g.size());
  for (size_t i = 0; i < g.size(); ++i) v[static_cast<int>(i)] = g[i];
  return v;
}

int run_simulate(int n, int p, int k, double rho, const std::string& beta,
                 const std::string& alpha, const std::string& theta, const std::string& delta,
                 double attr_split, int dates, std::uint64_t seed) {
  DgpSpec spec;
  spec.n = n;
  spec.p = p;
  spec.k = k;
  spec.rho = rho;
  spec.beta = beta.empty() ? Eigen::VectorXd::Zero(2 * p + 1) : parse_vec(beta);
  spec.alpha = alpha.empty() ? Eigen::VectorXd::Zero(p) : parse_vec(alpha);
  if (theta.empty()) {
    spec.theta.resize(2, k);
    for (int j = 0; j < k; ++j) spec.theta(0, j) = spec.theta(1, j) = j + 0.5;
  } else {
    Eigen::VectorXd t = parse_vec(theta);
    if (t.size() != 2 * k) throw ValidationError("theta needs 2k values (arm 0 then arm 1)");
    spec.theta.resize(2, k);
    for (int j = 0; j < k; ++j) {
      spec.theta(0, j) = t[j];
      spec.theta(1, j) = t[k + j];
    }
  }
  if (delta.empty()) {
    spec.delta.resize(k + 1);
    for (int j = 0; j <= k; ++j) spec.delta[j] = j - 0.5;
  } else {
    spec.delta = parse_vec(delta);
  }
  spec.attribute_split = attr_split;
  spec.hearing_dates = dates;
  spec.seed = seed;
  auto [ds, truth] = synth_generate(spec);
  emit_csv(ds, art("dataset.csv"));
  emit_oracle_csv(ds, truth, art("oracle.csv"));
  manifest("simulate",
           {{"n", n}, {"p", p}, {"k", k}, {"rho", rho}, {"beta", beta}, {"alpha", alpha},
            {"theta", theta}, {"delta", delta}, {"attribute_split", attr_split},
            {"hearing_dates", dates}},
           seed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"principal-stratification analysis of randomized recommendation experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file");
  app.add_option("--out", g_out, "output directory")->capture_default_str();

  DataArgs da;
  std::string outcome = "y";
  std::uint64_t seed = 1;
  int threads = 1;
  int bootstrap = 1000;
  int threshold = 1;
  double rho = 0.0;
  int chains = 4, iters = 2000;
  double burn = 0.5;
  std::string draws_path, subset = "all";
  double c0 = 0.0, c1 = 0.0;
  std::string c0s = "0:1:0.1", c1s = "0:1:0.1", rhos = "0", omegas = "0,1";
  double xi_off = 1.0;
  int crt_s = 400, reps = 200, z_arm = 1;
  int sim_n = 1000, sim_p = 2, sim_k = 1, sim_dates = 0;
  double sim_rho = 0.0, attr_split = 0.0;
  std::string sim_beta, sim_alpha, sim_theta, sim_delta;

  auto add_common = [&](CLI::App* c, bool with_seed = true) {
    da.attach(c);
    if (with_seed) c->add_option("--seed", seed, "rng seed");
    c->add_option("--threads", threads, "worker cap");
    return c;
  };

  auto* ingest = app.add_subcommand("ingest", "validate and canonicalize a dataset");
  da.attach(ingest);
  auto* itt = app.add_subcommand("itt", "unadjusted arm contrasts");
  da.attach(itt);
  auto* signs = add_common(app.add_subcommand("signs", "sign-identified effect numerators"));
  signs->add_option("--outcome", outcome)->required();
  signs->add_option("--threshold", threshold, "dichotomize decision at >= value");
  signs->add_option("--bootstrap", bootstrap);
  auto* bounds = app.add_subcommand("bounds", "potential-outcome bounds");
  da.attach(bounds);
  bounds->add_option("--outcome", outcome)->required();
  bounds->add_option("--threshold", threshold);
  auto* scores = app.add_subcommand("scores", "principal score estimation");
  da.attach(scores);
  scores->add_option("--outcome", outcome)->required();
  auto* hajek = add_common(app.add_subcommand("apce-hajek", "weighted stratum effects"));
  hajek->add_option("--outcome", outcome)->required();
  hajek->add_option("--bootstrap", bootstrap);
  auto* gibbs = add_common(app.add_subcommand("gibbs", "posterior sampling"));
  gibbs->add_option("--outcome", outcome)->required();
  gibbs->add_option("--rho", rho);
  gibbs->add_option("--chains", chains);
  gibbs->add_option("--iters", iters);
  gibbs->add_option("--burn", burn);
  auto* bayes = app.add_subcommand("apce-bayes", "posterior stratum effects");
  da.attach(bayes);
  bayes->add_option("--outcome", outcome)->required();
  bayes->add_option("--draws", draws_path)->required();
  bayes->add_option("--subset", subset);
  auto* fair = app.add_subcommand("fairness", "principal fairness deltas");
  da.attach(fair);
  fair->add_option("--outcome", outcome)->required();
  fair->add_option("--draws", draws_path)->required();
  fair->add_option("--subset", subset);
  auto* prule = app.add_subcommand("policy-rule", "cost-optimal decisions");
  da.attach(prule);
  prule->add_option("--outcome", outcome)->required();
  prule->add_option("--c0", c0);
  prule->add_option("--c1", c1);
  auto* psurf = app.add_subcommand("policy-surface", "optimal-share cost surface");
  da.attach(psurf);
  psurf->add_option("--outcome", outcome)->required();
  psurf->add_option("--c0-grid", c0s);
  psurf->add_option("--c1-grid", c1s);
  psurf->add_option("--subset", subset);
  auto* ucomp = app.add_subcommand("utility-compare", "judge vs recommendation utility");
  da.attach(ucomp);
  ucomp->add_option("--outcome", outcome)->required();
  ucomp->add_option("--c0", c0);
  ucomp->add_option("--c1", c1);
  ucomp->add_option("--z", z_arm, "arm whose observed decisions are scored");
  auto* prov = app.add_subcommand("provision", "optimal provision rule");
  da.attach(prov);
  prov->add_option("--outcome", outcome)->required();
  auto* sens = add_common(app.add_subcommand("sensitivity", "posterior effects over rho grid"));
  sens->add_option("--outcome", outcome)->required();
  sens->add_option("--rho-grid", rhos);
  sens->add_option("--chains", chains);
  sens->add_option("--iters", iters);
  sens->add_option("--burn", burn);
  auto* npsens = app.add_subcommand("np-sensitivity", "nonparametric sensitivity table");
  da.attach(npsens);
  npsens->add_option("--outcome", outcome)->required();
  npsens->add_option("--xi", xi_off, "constant off-diagonal deviation ratio");
  auto* crt = add_common(app.add_subcommand("crt", "spillover randomization test"));
  crt->add_option("--s", crt_s, "replicate count");
  auto* crtp = add_common(app.add_subcommand("crt-power", "spillover test power curve"));
  crtp->add_option("--omega-grid", omegas);
  crtp->add_option("--reps", reps);
  crtp->add_option("--s", crt_s);
  auto* sim = app.add_subcommand("simulate", "synthetic dataset with oracle truth");
  sim->add_option("--n", sim_n);
  sim->add_option("--p", sim_p);
  sim->add_option("--k", sim_k);
  sim->add_option("--rho", sim_rho);
  sim->add_option("--beta", sim_beta, "2p+1 values: z, x, z*x");
  sim->add_option("--alpha", sim_alpha, "p values");
  sim->add_option("--theta", sim_theta, "2k values: arm-0 cutpoints then arm-1");
  sim->add_option("--delta", sim_delta, "k+1 nondecreasing values");
  sim->add_option("--attribute-split", attr_split);
  sim->add_option("--hearing-dates", sim_dates);
  sim->add_option("--seed", seed)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    fs::create_directories(g_out);
    if (ingest->parsed()) return run_ingest(da);
    if (itt->parsed()) return run_itt(da);
    if (signs->parsed()) return run_signs(da, outcome, threshold, bootstrap, seed);
    if (bounds->parsed()) return run_bounds(da, outcome, threshold);
    if (scores->parsed()) return run_scores(da, outcome);
    if (hajek->parsed()) return run_apce_hajek(da, outcome, bootstrap, seed, threads);
    if (gibbs->parsed())
      return run_gibbs(da, outcome, gibbs_config(rho, chains, iters, burn, seed, threads));
    if (bayes->parsed()) return run_apce_bayes(da, outcome, draws_path, subset);
    if (fair->parsed()) return run_fairness(da, outcome, draws_path, subset);
    if (prule->parsed()) return run_policy_rule(da, outcome, c0, c1);
    if (psurf->parsed()) return run_policy_surface(da, outcome, c0s, c1s, subset);
    if (ucomp->parsed()) return run_utility_compare(da, outcome, c0, c1, z_arm);
    if (prov->parsed()) return run_provision(da, outcome);
    if (sens->parsed())
      return run_sensitivity(da, outcome, rhos,
                             gibbs_config(0.0, chains, iters, burn, seed, threads));
    if (npsens->parsed()) return run_np_sensitivity(da, outcome, xi_off);
    if (crt->parsed()) return run_crt(da, crt_s, seed, threads);
    if (crtp->parsed()) return run_crt_power(da, omegas, reps, crt_s, seed, threads);
    if (sim->parsed())
      return run_simulate(sim_n, sim_p, sim_k, sim_rho, sim_beta, sim_alpha, sim_theta,
                          sim_delta, attr_split, sim_dates, seed);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << json({{"error", "validation"}, {"message", e.what()}}).dump() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << json({{"error", "numerical"}, {"message", e.what()}}).dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << json({{"error", "internal"}, {"message", e.what()}}).dump() << '\n';
    return 3;
  }
}
