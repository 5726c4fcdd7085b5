#include "apce/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "apce/errors.hpp"
#include "apce/normal.hpp"
#include "apce/rng.hpp"
#include "apce/truncnorm.hpp"

namespace apce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd draw_std_normal(int n, RngStream& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// one Gibbs sweep pass over a truncated MVN with precision a and mean mu;
// components with nonneg[j] set are restricted to [0, inf)
void tmvn_gibbs_sweep(const Eigen::MatrixXd& a, const Eigen::VectorXd& mu,
                      const std::vector<bool>& nonneg, Eigen::VectorXd& x, RngStream& rng,
                      int sweeps) {
  const int m = static_cast<int>(mu.size());
  for (int s = 0; s < sweeps; ++s) {
    for (int j = 0; j < m; ++j) {
      double ajj = a(j, j);
      double shift = 0.0;
      for (int l = 0; l < m; ++l)
        if (l != j) shift += a(j, l) * (x[l] - mu[l]);
      double mj = mu[j] - shift / ajj;
      double sj = std::sqrt(1.0 / ajj);
      double lo = nonneg[j] ? 0.0 : -kInf;
      x[j] = draw_truncated_normal(mj, sj, lo, kInf, rng);
    }
  }
}

struct ChainWorkspace {
  Eigen::VectorXd beta;    // 2p+1
  Eigen::VectorXd alpha;   // p
  Eigen::VectorXd gaps;    // k+1: (delta_0, increments)
  Eigen::VectorXd delta;   // k+1 nondecreasing
  std::array<Eigen::VectorXd, 2> theta;  // per arm, k interior cutpoints
  Eigen::VectorXd dstar;   // n
  Eigen::VectorXd ystar;   // n
};

struct ModelData {
  Eigen::MatrixXd v;  // n x (2p+1): (z, x, z*x)
  Eigen::MatrixXd x;  // n x p
  Eigen::MatrixXd w;  // n x (k+1): cumulative decision indicators
  std::vector<int> z, d, y;
  int n = 0, p = 0, k = 1;
};

double theta_at(const Eigen::VectorXd& theta, int j) {
  // conceptual theta_0 = -inf, theta_{k+1} = +inf; stored entries are 1..k
  const int k = static_cast<int>(theta.size());
  if (j <= 0) return -kInf;
  if (j > k) return kInf;
  return theta[j - 1];
}

void check_finite(const ChainWorkspace& ws, int iter) {
  auto bad = [](const Eigen::VectorXd& v) { return !v.allFinite(); };
  if (bad(ws.beta) || bad(ws.alpha) || bad(ws.delta) || !ws.dstar.allFinite() ||
      !ws.ystar.allFinite())
    throw NumericalError("sampler state became non-finite at iteration " + std::to_string(iter));
}

void run_chain(const ModelData& md, const GibbsConfig& cfg, RngStream rng, int retained,
               Eigen::MatrixXd& out_beta, Eigen::MatrixXd& out_alpha,
               Eigen::MatrixXd& out_theta0, Eigen::MatrixXd& out_theta1,
               Eigen::MatrixXd& out_delta) {
  const int n = md.n, p = md.p, k = md.k;
  const int pb = 2 * p + 1;
  const double rho = cfg.rho;
  const double omr2 = 1.0 - rho * rho;
  const double s0 = cfg.cutpoint_prior_sd;

  // prior precisions and the fixed-posterior covariance factors
  Eigen::MatrixXd prior_b = cfg.prior_precision_decision * Eigen::MatrixXd::Identity(pb, pb);
  Eigen::MatrixXd prior_a = cfg.prior_precision_risk * Eigen::MatrixXd::Identity(p, p);
  // C: lower-triangular ones maps increment vector to the intercept levels
  Eigen::MatrixXd cmat = Eigen::MatrixXd::Zero(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= i; ++j) cmat(i, j) = 1.0;
  Eigen::MatrixXd prior_g = cmat.transpose() * cmat / (s0 * s0);

  Eigen::MatrixXd prec_b, prec_a, prec_g;
  Eigen::MatrixXd cov_b_chol, cov_a_chol, cov_b, cov_a, cov_g;
  if (!cfg.prior_only) {
    prec_b = md.v.transpose() * md.v / omr2 + prior_b;
    prec_a = md.x.transpose() * md.x / omr2 + prior_a;
    prec_g = md.w.transpose() * md.w / omr2 + prior_g;
  } else {
    prec_b = prior_b;
    prec_a = prior_a;
    prec_g = prior_g;
  }
  cov_b = prec_b.llt().solve(Eigen::MatrixXd::Identity(pb, pb));
  cov_a = prec_a.llt().solve(Eigen::MatrixXd::Identity(p, p));
  cov_b_chol = Eigen::LLT<Eigen::MatrixXd>(cov_b).matrixL();
  cov_a_chol = Eigen::LLT<Eigen::MatrixXd>(cov_a).matrixL();
  cov_g = prec_g.llt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));

  ChainWorkspace ws;
  // scaled-down prior draws keep the initial latent boxes sane while still
  // giving chains distinct starting points
  ws.beta = 0.1 * draw_std_normal(pb, rng) / std::sqrt(cfg.prior_precision_decision);
  ws.alpha = 0.1 * draw_std_normal(p, rng) / std::sqrt(cfg.prior_precision_risk);
  ws.gaps = Eigen::VectorXd::Zero(k + 1);
  ws.gaps[0] = 0.0;
  for (int j = 1; j <= k; ++j) ws.gaps[j] = 0.5;
  ws.delta = cmat * ws.gaps;

  // empirical latent-scale cutpoint starts per arm
  for (int z = 0; z < 2; ++z) {
    Eigen::VectorXd th(k);
    std::vector<double> counts(k + 1, 0.0);
    double tot = 0.0;
    for (int i = 0; i < n; ++i)
      if (md.z[i] == z) {
        counts[md.d[i]] += 1.0;
        tot += 1.0;
      }
    double cum = 0.0;
    for (int j = 0; j < k; ++j) {
      cum += counts[j] / tot;
      th[j] = norm_quantile(std::clamp(cum, 1e-4, 1.0 - 1e-4));
    }
    for (int j = 1; j < k; ++j) th[j] = std::max(th[j], th[j - 1] + 1e-3);
    ws.theta[z] = th;
  }

  // latent starts at conditional means pushed inside their boxes
  ws.dstar.resize(n);
  ws.ystar.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& th = ws.theta[md.z[i]];
    double lo = theta_at(th, md.d[i]);
    double hi = theta_at(th, md.d[i] + 1);
    double m = md.v.row(i).dot(ws.beta);
    double a = std::isfinite(lo) ? lo : hi - 1.0;
    double b = std::isfinite(hi) ? hi : lo + 1.0;
    ws.dstar[i] = std::clamp(m, a + 0.05 * (b - a), b - 0.05 * (b - a));
    double my = md.x.row(i).dot(ws.alpha) - ws.delta[md.d[i]];
    ws.ystar[i] = md.y[i] == 1 ? std::max(my, 0.25) : std::min(my, -0.25);
  }

  std::vector<bool> gap_nonneg(k + 1, true);
  gap_nonneg[0] = false;

  const int burn = cfg.iterations - retained;
  int row = 0;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    if (!cfg.prior_only) {
      // latent pair imputation
      for (int i = 0; i < n; ++i) {
        const auto& th = ws.theta[md.z[i]];
        double md_i = md.v.row(i).dot(ws.beta);
        double my_i = md.x.row(i).dot(ws.alpha) - ws.delta[md.d[i]];
        double dlo = theta_at(th, md.d[i]);
        double dhi = theta_at(th, md.d[i] + 1);
        double ylo = md.y[i] == 1 ? 0.0 : -kInf;
        double yhi = md.y[i] == 1 ? kInf : 0.0;
        BivariatePoint pt = draw_truncated_bivariate(md_i, my_i, rho, dlo, dhi, ylo, yhi,
                                                     ws.dstar[i], ws.ystar[i], rng,
                                                     cfg.latent_sweeps);
        ws.dstar[i] = pt.d;
        ws.ystar[i] = pt.y;
      }

      // decision coefficients
      Eigen::VectorXd resid_y = ws.ystar + md.w * ws.gaps - md.x * ws.alpha;
      Eigen::VectorXd bmean = cov_b * (md.v.transpose() * (ws.dstar - rho * resid_y) / omr2);
      ws.beta = bmean + cov_b_chol * draw_std_normal(pb, rng);

      // risk coefficients
      Eigen::VectorXd resid_d = ws.dstar - md.v * ws.beta;
      Eigen::VectorXd amean =
          cov_a * (md.x.transpose() * (ws.ystar + md.w * ws.gaps - rho * resid_d) / omr2);
      ws.alpha = amean + cov_a_chol * draw_std_normal(p, rng);

      // risk intercepts via the increment vector, increments kept nonnegative
      Eigen::VectorXd gmean =
          cov_g * (md.w.transpose() * (rho * resid_d - (ws.ystar - md.x * ws.alpha)) / omr2);
      tmvn_gibbs_sweep(prec_g, gmean, gap_nonneg, ws.gaps, rng, 3);
      ws.delta = cmat * ws.gaps;

      // arm-specific cutpoints
      for (int z = 0; z < 2; ++z) {
        auto& th = ws.theta[z];
        for (int j = 1; j <= k; ++j) {
          double lo = j >= 2 ? th[j - 2] : -kInf;
          double hi = j <= k - 1 ? th[j] : kInf;
          for (int i = 0; i < n; ++i) {
            if (md.z[i] != z) continue;
            if (md.d[i] == j - 1) lo = std::max(lo, ws.dstar[i]);
            if (md.d[i] == j) hi = std::min(hi, ws.dstar[i]);
          }
          th[j - 1] = draw_truncated_normal(0.0, s0, lo, hi, rng);
        }
      }

      // translating (beta_Z, arm-1 cutpoints, arm-1 latents) together leaves
      // the likelihood invariant, so the posterior is ridged along that
      // direction and single-site updates crawl along it; resample the shift
      // from its exact conditional, which involves only the priors
      {
        double prec_c = cfg.prior_precision_decision + k / (s0 * s0);
        double mean_c = -(cfg.prior_precision_decision * ws.beta[0] +
                          ws.theta[1].sum() / (s0 * s0)) /
                        prec_c;
        double shift = mean_c + rng.normal() / std::sqrt(prec_c);
        ws.beta[0] += shift;
        ws.theta[1].array() += shift;
        for (int i = 0; i < n; ++i)
          if (md.z[i] == 1) ws.dstar[i] += shift;
      }

      // matching translation for arm 0: no coefficient absorbs the shift, so
      // the conditional is informed by the decision residuals, but it stays
      // Gaussian; this replaces the slow one-at-a-time cutpoint crawl
      {
        double prec_c = k / (s0 * s0);
        double rhs = -ws.theta[0].sum() / (s0 * s0);
        for (int i = 0; i < n; ++i) {
          if (md.z[i] != 0) continue;
          double e1 = ws.dstar[i] - md.v.row(i).dot(ws.beta);
          double e2 = ws.ystar[i] + md.w.row(i).dot(ws.gaps) - md.x.row(i).dot(ws.alpha);
          prec_c += 1.0 / omr2;
          rhs -= (e1 - rho * e2) / omr2;
        }
        double shift = rhs / prec_c + rng.normal() / std::sqrt(prec_c);
        ws.theta[0].array() += shift;
        for (int i = 0; i < n; ++i)
          if (md.z[i] == 0) ws.dstar[i] += shift;
      }
    } else {
      // exact prior draws
      ws.beta = draw_std_normal(pb, rng) / std::sqrt(cfg.prior_precision_decision);
      ws.alpha = draw_std_normal(p, rng) / std::sqrt(cfg.prior_precision_risk);
      ws.gaps[0] = s0 * rng.normal();
      for (int j = 1; j <= k; ++j)
        ws.gaps[j] = draw_truncated_normal(0.0, s0, 0.0, kInf, rng);
      ws.delta = cmat * ws.gaps;
      for (int z = 0; z < 2; ++z) {
        double prev = -kInf;
        for (int j = 0; j < k; ++j) {
          ws.theta[z][j] = draw_truncated_normal(0.0, s0, prev, kInf, rng);
          prev = ws.theta[z][j];
        }
      }
    }

    if (iter % 100 == 0) check_finite(ws, iter);

    if (iter >= burn) {
      out_beta.row(row) = ws.beta;
      out_alpha.row(row) = ws.alpha;
      out_theta0.row(row) = ws.theta[0];
      out_theta1.row(row) = ws.theta[1];
      out_delta.row(row) = ws.delta;
      ++row;
    }
  }
}

}  // namespace

void GibbsConfig::validate() const {
  if (chains < 1) throw ValidationError("chains must be >= 1");
  if (iterations < 2) throw ValidationError("iterations must be >= 2");
  if (burn_fraction < 0.0 || burn_fraction >= 1.0)
    throw ValidationError("burn fraction must lie in [0, 1)");
  if (std::abs(rho) >= 1.0) throw ValidationError("rho must lie in (-1, 1)");
  if (prior_precision_decision <= 0.0 || prior_precision_risk <= 0.0 || cutpoint_prior_sd <= 0.0)
    throw ValidationError("prior scale parameters must be positive");
}

PosteriorDraws gibbs_run(const Dataset& ds, const std::string& outcome,
                         const Eigen::MatrixXd& x, const GibbsConfig& cfg) {
  cfg.validate();
  const int n = ds.n();
  if (x.rows() != n) throw ValidationError("design row count does not match dataset");
  const int p = static_cast<int>(x.cols());
  const int k = ds.scale.k;

  ModelData md;
  md.n = n;
  md.p = p;
  md.k = k;
  md.z.resize(n);
  md.d.resize(n);
  md.y = ds.outcome_column(outcome);
  md.x = x;
  md.v.resize(n, 2 * p + 1);
  md.w = Eigen::MatrixXd::Zero(n, k + 1);
  std::vector<std::vector<int>> cell(2, std::vector<int>(k + 1, 0));
  for (int i = 0; i < n; ++i) {
    md.z[i] = ds.records[i].z;
    md.d[i] = ds.records[i].d;
    cell[md.z[i]][md.d[i]]++;
    md.v(i, 0) = md.z[i];
    md.v.row(i).segment(1, p) = x.row(i);
    md.v.row(i).segment(1 + p, p) = md.z[i] * x.row(i);
    for (int c = 0; c <= md.d[i]; ++c) md.w(i, c) = 1.0;
  }
  if (!cfg.prior_only) {
    for (int z = 0; z < 2; ++z)
      for (int d = 0; d <= k; ++d)
        if (cell[z][d] == 0)
          throw ValidationError("decision category " + std::to_string(d) +
                                " is empty in arm z=" + std::to_string(z));
  }

  const int retained =
      static_cast<int>(std::ceil(cfg.iterations * (1.0 - cfg.burn_fraction)));

  PosteriorDraws out;
  out.p = p;
  out.k = k;
  out.rho = cfg.rho;
  out.rho_near_singular = std::abs(cfg.rho) > 0.98;
  out.beta.assign(cfg.chains, Eigen::MatrixXd(retained, 2 * p + 1));
  out.alpha.assign(cfg.chains, Eigen::MatrixXd(retained, p));
  out.theta0.assign(cfg.chains, Eigen::MatrixXd(retained, k));
  out.theta1.assign(cfg.chains, Eigen::MatrixXd(retained, k));
  out.delta.assign(cfg.chains, Eigen::MatrixXd(retained, k + 1));

  RngStream root(cfg.seed);
  auto work = [&](int c) {
    run_chain(md, cfg, root.substream(1000 + static_cast<std::uint64_t>(c)), retained,
              out.beta[c], out.alpha[c], out.theta0[c], out.theta1[c], out.delta[c]);
  };
  if (cfg.threads > 1 && cfg.chains > 1) {
    std::vector<std::thread> pool;
    int active = std::min(cfg.threads, cfg.chains);
    std::vector<std::exception_ptr> errs(cfg.chains);
    for (int t = 0; t < active; ++t) {
      pool.emplace_back([&, t] {
        for (int c = t; c < cfg.chains; c += active) {
          try {
            work(c);
          } catch (...) {
            errs[c] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    for (int c = 0; c < cfg.chains; ++c) work(c);
  }
  return out;
}

std::vector<std::string> PosteriorDraws::parameter_names() const {
  std::vector<std::string> names;
  for (int j = 0; j < 2 * p + 1; ++j) names.push_back("beta[" + std::to_string(j) + "]");
  for (int j = 0; j < p; ++j) names.push_back("alpha[" + std::to_string(j) + "]");
  for (int j = 1; j <= k; ++j) names.push_back("theta0[" + std::to_string(j) + "]");
  for (int j = 1; j <= k; ++j) names.push_back("theta1[" + std::to_string(j) + "]");
  for (int j = 0; j <= k; ++j) names.push_back("delta[" + std::to_string(j) + "]");
  return names;
}

Eigen::VectorXd PosteriorDraws::parameter_row(int c, int t) const {
  Eigen::VectorXd row(2 * p + 1 + p + 2 * k + k + 1);
  int at = 0;
  row.segment(at, 2 * p + 1) = beta[c].row(t);
  at += 2 * p + 1;
  row.segment(at, p) = alpha[c].row(t);
  at += p;
  row.segment(at, k) = theta0[c].row(t);
  at += k;
  row.segment(at, k) = theta1[c].row(t);
  at += k;
  row.segment(at, k + 1) = delta[c].row(t);
  return row;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> seqs;
  for (const auto& c : chains) {
    int half = static_cast<int>(c.size()) / 2;
    if (half < 2) throw ValidationError("chains too short for split R-hat");
    seqs.emplace_back(c.begin(), c.begin() + half);
    seqs.emplace_back(c.end() - half, c.end());
  }
  const int m = static_cast<int>(seqs.size());
  const double len = static_cast<double>(seqs[0].size());
  std::vector<double> means(m), vars(m);
  for (int j = 0; j < m; ++j) {
    double mu = std::accumulate(seqs[j].begin(), seqs[j].end(), 0.0) / len;
    double ss = 0.0;
    for (double v : seqs[j]) ss += (v - mu) * (v - mu);
    means[j] = mu;
    vars[j] = ss / (len - 1.0);
  }
  double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= len / (m - 1.0);
  double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (w < 1e-300) return 1.0;
  double varplus = (len - 1.0) / len * w + b / len;
  return std::sqrt(varplus / w);
}

std::vector<double> gelman_rubin(const PosteriorDraws& draws) {
  const int q = static_cast<int>(draws.parameter_names().size());
  std::vector<double> out(q);
  const int t = draws.retained_per_chain();
  for (int j = 0; j < q; ++j) {
    std::vector<std::vector<double>> chains;
    for (int c = 0; c < draws.chains(); ++c) {
      std::vector<double> series(t);
      for (int i = 0; i < t; ++i) series[i] = draws.parameter_row(c, i)[j];
      chains.push_back(std::move(series));
    }
    out[j] = split_rhat(chains);
  }
  return out;
}

namespace {

struct DrawJoint {
  // joint[z](d, r): mean over cases of Pr(D(z)=d, R=r | X)
  std::array<Eigen::MatrixXd, 2> joint;
  Eigen::VectorXd pr;  // mean over cases of Pr(R=r | X)
};

DrawJoint draw_joint_probs(const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha,
                           const std::array<Eigen::VectorXd, 2>& theta,
                           const Eigen::VectorXd& delta, double rho, const Eigen::MatrixXd& x,
                           const std::vector<int>& idx, int k) {
  const int p = static_cast<int>(x.cols());
  DrawJoint out;
  out.joint[0] = Eigen::MatrixXd::Zero(k + 1, k + 2);
  out.joint[1] = Eigen::MatrixXd::Zero(k + 1, k + 2);
  out.pr = Eigen::VectorXd::Zero(k + 2);
  auto delta_at = [&](int r) {
    if (r < 0) return -kInf;
    if (r > k) return kInf;
    return delta[r];
  };
  for (int i : idx) {
    double mr = x.row(i).dot(alpha.head(p));
    for (int r = 0; r <= k + 1; ++r) {
      double rl = delta_at(r - 1) - mr;
      double rh = delta_at(r) - mr;
      double prr = std::isfinite(rh) ? norm_cdf(rh) : 1.0;
      prr -= std::isfinite(rl) ? norm_cdf(rl) : 0.0;
      prr = std::max(prr, 0.0);
      out.pr[r] += prr;
      for (int z = 0; z < 2; ++z) {
        double mdz = beta[0] * z + x.row(i).dot(beta.segment(1, p)) +
                     z * x.row(i).dot(beta.segment(1 + p, p));
        for (int d = 0; d <= k; ++d) {
          double dl = theta_at(theta[z], d) - mdz;
          double dh = theta_at(theta[z], d + 1) - mdz;
          double pj;
          if (rho == 0.0) {
            double pd = (std::isfinite(dh) ? norm_cdf(dh) : 1.0) -
                        (std::isfinite(dl) ? norm_cdf(dl) : 0.0);
            pj = std::max(pd, 0.0) * prr;
          } else {
            pj = bvn_rect(dl, dh, rl, rh, rho);
          }
          out.joint[z](d, r) += pj;
        }
      }
    }
  }
  const double m = static_cast<double>(idx.size());
  out.joint[0] /= m;
  out.joint[1] /= m;
  out.pr /= m;
  return out;
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

}  // namespace

ApceSummary posterior_apce(const PosteriorDraws& draws, const Eigen::MatrixXd& x,
                           const std::string& outcome, const std::vector<int>* subset,
                           int thin) {
  if (thin < 1) throw ValidationError("thin must be >= 1");
  const int k = draws.k;
  std::vector<int> idx;
  if (subset) {
    idx = *subset;
    if (idx.empty()) throw ValidationError("subset is empty");
  } else {
    idx.resize(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
  }

  // per-draw series: APCE(d,r) for d=0..k, r=0..k+1; APCEp(r) r=1..k; APCEs
  const int cells = (k + 1) * (k + 2);
  std::vector<std::vector<double>> cell_series(cells);
  std::vector<std::vector<double>> apcep_series(k);
  std::vector<double> apces_series;
  Eigen::VectorXd pr_accum = Eigen::VectorXd::Zero(k + 2);
  int used = 0;

  for (int c = 0; c < draws.chains(); ++c) {
    for (int t = 0; t < draws.retained_per_chain(); t += thin) {
      std::array<Eigen::VectorXd, 2> theta = {draws.theta0[c].row(t).transpose(),
                                              draws.theta1[c].row(t).transpose()};
      DrawJoint dj = draw_joint_probs(draws.beta[c].row(t).transpose(),
                                      draws.alpha[c].row(t).transpose(), theta,
                                      draws.delta[c].row(t).transpose(), draws.rho, x, idx, k);
      pr_accum += dj.pr;
      ++used;
      for (int r = 0; r <= k + 1; ++r) {
        double den = std::max(dj.pr[r], 1e-12);
        for (int d = 0; d <= k; ++d) {
          double eff = (dj.joint[1](d, r) - dj.joint[0](d, r)) / den;
          cell_series[d * (k + 2) + r].push_back(eff);
        }
      }
      for (int r = 1; r <= k; ++r) {
        double den = std::max(dj.pr[r], 1e-12);
        double num = 0.0;
        for (int d = r; d <= k; ++d) num += dj.joint[1](d, r) - dj.joint[0](d, r);
        apcep_series[r - 1].push_back(num / den);
      }
      apces_series.push_back(cell_series[0 * (k + 2) + 0].back());
    }
  }

  ApceSummary out;
  auto push = [&](int r, const std::string& label, std::vector<double>& series) {
    ApceEstimate e;
    e.stratum = r;
    e.decision = label;
    e.method = "bayes";
    e.outcome = outcome;
    e.point = std::accumulate(series.begin(), series.end(), 0.0) /
              static_cast<double>(series.size());
    auto ci = central_interval(series);
    e.ci_low = ci.first;
    e.ci_high = ci.second;
    out.estimates.push_back(e);
  };
  for (int r = 0; r <= k + 1; ++r)
    for (int d = 0; d <= k; ++d) push(r, "=" + std::to_string(d), cell_series[d * (k + 2) + r]);
  for (int r = 1; r <= k; ++r) push(r, ">=" + std::to_string(r), apcep_series[r - 1]);
  push(0, "safe", apces_series);

  pr_accum /= static_cast<double>(used);
  out.stratum_proportions.assign(pr_accum.data(), pr_accum.data() + k + 2);
  out.apcep_draws.resize(used, k);
  for (int r = 1; r <= k; ++r)
    for (int t = 0; t < used; ++t) out.apcep_draws(t, r - 1) = apcep_series[r - 1][t];
  return out;
}

std::vector<std::pair<double, ApceSummary>> sensitivity_grid(const Dataset& ds,
                                                             const std::string& outcome,
                                                             const Eigen::MatrixXd& x,
                                                             const GibbsConfig& base,
                                                             const std::vector<double>& rhos) {
  std::vector<std::pair<double, ApceSummary>> out;
  for (double r : rhos) {
    GibbsConfig cfg = base;
    cfg.rho = r;
    PosteriorDraws draws = gibbs_run(ds, outcome, x, cfg);
    out.emplace_back(r, posterior_apce(draws, x, outcome));
  }
  return out;
}

std::array<Eigen::MatrixXd, 2> np_sensitivity(const NpSensitivityInput& in) {
  const int k = in.k;
  for (int z = 0; z < 2; ++z) {
    if (in.xi[z].rows() != k + 1 || in.xi[z].cols() != k + 1)
      throw ValidationError("xi must be (k+1) x (k+1)");
    if ((in.xi[z].array() <= 0.0).any()) throw ValidationError("xi entries must be positive");
    for (int r = 0; r <= k; ++r)
      if (std::abs(in.xi[z](r, r) - 1.0) > 1e-12)
        throw ValidationError("xi diagonal must equal 1");
    if (in.p_y_given_zd[z].cols() != k + 1 || in.p_d_given_z[z].cols() != k + 1)
      throw ValidationError("prediction matrices must have k+1 columns");
  }
  const int n = static_cast<int>(in.p_y_given_zd[0].rows());

  std::array<Eigen::MatrixXd, 2> out;
  for (int z = 0; z < 2; ++z) {
    const auto& py = in.p_y_given_zd[z];
    const auto& pd = in.p_d_given_z[z];
    const auto& xi = in.xi[z];

    // q(i, r, d) = Pr{Y(r)=1 | D(z)=d, X_i}; marg(i, r) = Pr{Y(r)=1 | X_i}
    auto q = [&](int i, int r, int d) { return xi(r, d) / xi(r, r) * py(i, r); };
    auto marg = [&](int i, int r) {
      double s = 0.0;
      for (int d = 0; d <= k; ++d) s += xi(r, d) * pd(i, d);
      return s / xi(r, r) * py(i, r);
    };

    Eigen::MatrixXd res(k + 1, k + 2);
    for (int r = 0; r <= k + 1; ++r) {
      double den = 0.0;
      std::vector<double> num(k + 1, 0.0);
      for (int i = 0; i < n; ++i) {
        if (r == 0) {
          den += 1.0 - marg(i, 0);
          for (int d = 0; d <= k; ++d) num[d] += (1.0 - q(i, 0, d)) * pd(i, d);
        } else if (r == k + 1) {
          den += marg(i, k);
          for (int d = 0; d <= k; ++d) num[d] += q(i, k, d) * pd(i, d);
        } else {
          den += marg(i, r - 1) - marg(i, r);
          for (int d = 0; d <= k; ++d)
            num[d] += (q(i, r - 1, d) - q(i, r, d)) * pd(i, d);
        }
      }
      if (den <= 0.0)
        throw NumericalError("stratum " + std::to_string(r) +
                             " has nonpositive implied mass under the supplied xi");
      for (int d = 0; d <= k; ++d) res(d, r) = num[d] / den;
    }
    out[z] = res;
  }
  return out;
}

}  // namespace apce
