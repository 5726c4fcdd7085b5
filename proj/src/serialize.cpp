#include "apce/serialize.hpp"

#include <cstdio>
#include <fstream>

#include "apce/errors.hpp"

namespace apce {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(vec_to_json(m.row(i).transpose()));
  return a;
}

Eigen::MatrixXd mat_from_json(const json& a) {
  if (a.empty()) return {};
  Eigen::MatrixXd m(a.size(), a[0].size());
  for (size_t i = 0; i < a.size(); ++i)
    m.row(static_cast<int>(i)) = vec_from_json(a[i]).transpose();
  return m;
}

}  // namespace

json probit_fit_to_json(const ProbitFit& fit, const std::vector<std::string>& names) {
  return {{"model", "outcome_probit"},       {"alpha", vec_to_json(fit.alpha)},
          {"delta", vec_to_json(fit.delta)}, {"vcov", mat_to_json(fit.vcov)},
          {"loglik", fit.loglik},            {"converged", fit.converged},
          {"iterations", fit.iterations},    {"k", fit.k},
          {"covariates", names}};
}

ProbitFit probit_fit_from_json(const json& j) {
  if (j.value("model", "") != "outcome_probit")
    throw ValidationError("not an outcome probit fit");
  ProbitFit fit;
  fit.alpha = vec_from_json(j.at("alpha"));
  fit.delta = vec_from_json(j.at("delta"));
  fit.vcov = mat_from_json(j.at("vcov"));
  fit.loglik = j.at("loglik").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  fit.k = j.at("k").get<int>();
  return fit;
}

json ordinal_fit_to_json(const OrdinalFit& fit, const std::vector<std::string>& names) {
  return {{"model", "ordinal"},
          {"link", fit.link == Link::Probit ? "probit" : "logit"},
          {"beta", vec_to_json(fit.beta)},
          {"cutpoints", vec_to_json(fit.cutpoints)},
          {"vcov", mat_to_json(fit.vcov)},
          {"loglik", fit.loglik},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"k", fit.k},
          {"covariates", names}};
}

OrdinalFit ordinal_fit_from_json(const json& j) {
  if (j.value("model", "") != "ordinal") throw ValidationError("not an ordinal fit");
  OrdinalFit fit;
  fit.link = j.at("link").get<std::string>() == "probit" ? Link::Probit : Link::Logit;
  fit.beta = vec_from_json(j.at("beta"));
  fit.cutpoints = vec_from_json(j.at("cutpoints"));
  fit.vcov = mat_from_json(j.at("vcov"));
  fit.loglik = j.at("loglik").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  fit.k = j.at("k").get<int>();
  return fit;
}

json draws_to_json(const PosteriorDraws& draws) {
  json chains = json::array();
  for (int c = 0; c < draws.chains(); ++c) {
    chains.push_back({{"beta", mat_to_json(draws.beta[c])},
                      {"alpha", mat_to_json(draws.alpha[c])},
                      {"theta0", mat_to_json(draws.theta0[c])},
                      {"theta1", mat_to_json(draws.theta1[c])},
                      {"delta", mat_to_json(draws.delta[c])}});
  }
  return {{"model", "joint_ordinal_probit"}, {"p", draws.p},  {"k", draws.k},
          {"rho", draws.rho},                {"chains", chains}};
}

PosteriorDraws draws_from_json(const json& j) {
  if (j.value("model", "") != "joint_ordinal_probit")
    throw ValidationError("not a draw archive");
  PosteriorDraws d;
  d.p = j.at("p").get<int>();
  d.k = j.at("k").get<int>();
  d.rho = j.at("rho").get<double>();
  for (const auto& c : j.at("chains")) {
    d.beta.push_back(mat_from_json(c.at("beta")));
    d.alpha.push_back(mat_from_json(c.at("alpha")));
    d.theta0.push_back(mat_from_json(c.at("theta0")));
    d.theta1.push_back(mat_from_json(c.at("theta1")));
    d.delta.push_back(mat_from_json(c.at("delta")));
  }
  return d;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return j;
}

void write_apce_csv(const std::string& path, const std::vector<ApceEstimate>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "outcome,stratum,decision,method,estimate,ci_low,ci_high\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& r : rows)
    out << r.outcome << ',' << r.stratum << ',' << r.decision << ',' << r.method << ','
        << fmt(r.point) << ',' << fmt(r.ci_low) << ',' << fmt(r.ci_high) << '\n';
}

std::string config_hash(const json& config) {
  std::string dump = config.dump();  // nlohmann objects dump with sorted keys
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::string& path, const std::string& command, const json& config,
                    std::uint64_t seed) {
  json m = {{"command", command},
            {"config", config},
            {"config_hash", config_hash(config)},
            {"seed", seed},
            {"version", APCE_VERSION}};
  write_json(path, m);
}

}  // namespace apce
