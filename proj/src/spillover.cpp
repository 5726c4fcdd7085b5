#include "apce/spillover.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "apce/errors.hpp"
#include "apce/outcome_models.hpp"
#include "apce/rng.hpp"

namespace apce {

namespace {

struct DateIndex {
  std::map<int, std::vector<int>> by_order;  // hearing order -> case indices
  std::vector<int> orders;                   // per case
};

DateIndex build_dates(const Dataset& ds) {
  DateIndex di;
  di.orders.resize(ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    if (!ds.records[i].hearing_order)
      throw ValidationError("case " + ds.records[i].case_id + " has no hearing order");
    di.orders[i] = *ds.records[i].hearing_order;
    di.by_order[di.orders[i]].push_back(i);
  }
  return di;
}

std::vector<std::optional<double>> ztilde_from(const DateIndex& di,
                                               const std::vector<int>& z) {
  std::vector<std::optional<double>> out(di.orders.size());
  std::map<int, double> frac;
  for (const auto& [order, idx] : di.by_order) {
    double t = 0.0;
    for (int i : idx) t += z[i];
    frac[order] = t / static_cast<double>(idx.size());
  }
  for (size_t i = 0; i < di.orders.size(); ++i) {
    auto it = frac.find(di.orders[i] - 1);
    if (it != frac.end()) out[i] = it->second;
  }
  return out;
}

// squared exposure coefficient from OLS of D on (1, Z, exposure) over the
// even-order cases that have an exposure value
double crt_statistic(const Dataset& ds, const DateIndex& di, const std::vector<int>& z,
                     bool* degenerate) {
  auto zt = ztilde_from(di, z);
  std::vector<int> rows;
  for (int i = 0; i < ds.n(); ++i)
    if (di.orders[i] % 2 == 0 && zt[i]) rows.push_back(i);
  if (rows.size() < 4) throw ValidationError("too few even-order cases for the test");
  Eigen::MatrixXd x(rows.size(), 3);
  Eigen::VectorXd y(rows.size());
  for (size_t j = 0; j < rows.size(); ++j) {
    int i = rows[j];
    x(j, 0) = 1.0;
    x(j, 1) = z[i];
    x(j, 2) = *zt[i];
    y[j] = ds.records[i].d;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 3) {
    *degenerate = true;
    return 0.0;
  }
  *degenerate = false;
  double coef = qr.solve(y)[2];
  return coef * coef;
}

}  // namespace

std::vector<std::optional<double>> compute_ztilde(const Dataset& ds) {
  DateIndex di = build_dates(ds);
  std::vector<int> z(ds.n());
  for (int i = 0; i < ds.n(); ++i) z[i] = ds.records[i].z;
  return ztilde_from(di, z);
}

CrtResult crt_test(const Dataset& ds, int s, std::uint64_t seed, int threads) {
  if (s < 100) throw ValidationError("replicate count must be >= 100");
  DateIndex di = build_dates(ds);
  std::vector<int> z_obs(ds.n());
  for (int i = 0; i < ds.n(); ++i) z_obs[i] = ds.records[i].z;

  bool degen = false;
  double t_obs = crt_statistic(ds, di, z_obs, &degen);
  if (degen) throw NumericalError("observed test regression is collinear");

  // the observed statistic is itself one draw from the conditional null, so
  // it joins the reference set and p >= 1/s by construction
  CrtResult res;
  res.t_obs = t_obs;
  res.s = s;
  res.null_draws.resize(s);
  res.null_draws[s - 1] = t_obs;

  std::vector<int> odd_cases;
  for (int i = 0; i < ds.n(); ++i)
    if (di.orders[i] % 2 == 1) odd_cases.push_back(i);

  RngStream root(seed);
  auto replicate = [&](int b) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(b));
    std::vector<int> z = z_obs;
    // collinear replicates are redrawn; 10 attempts each bounds the total
    // redraw count at 10 s
    for (int attempt = 0; attempt < 10; ++attempt) {
      for (int i : odd_cases) z[i] = rng.bernoulli(0.5) ? 1 : 0;
      bool bad = false;
      double t = crt_statistic(ds, di, z, &bad);
      if (!bad) return t;
    }
    throw NumericalError("replicate regressions repeatedly collinear");
  };

  auto worker = [&](int t0, int stride) {
    for (int b = t0; b < s - 1; b += stride) res.null_draws[b] = replicate(b);
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          worker(t, threads);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    worker(0, 1);
  }

  int ge = 0;
  for (double t : res.null_draws)
    if (t >= t_obs) ++ge;
  res.p_value = static_cast<double>(ge) / static_cast<double>(s);
  return res;
}

std::vector<PowerPoint> crt_power(const Dataset& ds, const std::vector<double>& omega_grid,
                                  int reps, int s_per_test, std::uint64_t seed, int threads) {
  if (omega_grid.empty()) throw ValidationError("omega grid is empty");
  if (reps < 100) throw ValidationError("reps must be >= 100");
  DateIndex di = build_dates(ds);
  const int k = ds.scale.k;

  // baseline ordinal-logit fit of D on (Z, exposure) over exposed cases
  auto zt_obs = compute_ztilde(ds);
  std::vector<int> d_fit;
  std::vector<int> fit_rows;
  for (int i = 0; i < ds.n(); ++i)
    if (zt_obs[i]) fit_rows.push_back(i);
  Eigen::MatrixXd x_fit(fit_rows.size(), 2);
  for (size_t j = 0; j < fit_rows.size(); ++j) {
    int i = fit_rows[j];
    x_fit(j, 0) = ds.records[i].z;
    x_fit(j, 1) = *zt_obs[i];
    d_fit.push_back(ds.records[i].d);
  }
  OrdinalFit base = fit_ordinal(d_fit, x_fit, Link::Logit, k);
  const double beta_z = base.beta[0];

  auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

  auto simulate_one = [&](double omega, RngStream rng) {
    // fresh fair-coin assignment everywhere, then decisions from the ordinal
    // logit with the exposure coefficient forced to omega
    std::vector<int> z(ds.n());
    for (int i = 0; i < ds.n(); ++i) z[i] = rng.bernoulli(0.5) ? 1 : 0;
    auto zt = ztilde_from(di, z);
    Dataset sim = ds;
    for (int i = 0; i < ds.n(); ++i) {
      sim.records[i].z = z[i];
      double eta = beta_z * z[i] + omega * (zt[i] ? *zt[i] : 0.0);
      double u = rng.uniform();
      int d = k;
      double cum = 0.0;
      for (int j = 0; j < k; ++j) {
        cum = logistic(base.cutpoints[j] - eta);
        if (u <= cum) {
          d = j;
          break;
        }
      }
      sim.records[i].d = d;
    }
    CrtResult r = crt_test(sim, s_per_test, rng.substream(7).seed(), 1);
    return r.p_value < 0.05;
  };

  std::vector<PowerPoint> out;
  RngStream root(seed);
  for (size_t g = 0; g < omega_grid.size(); ++g) {
    std::vector<int> reject(reps, 0);
    auto worker = [&](int t0, int stride) {
      for (int b = t0; b < reps; b += stride) {
        RngStream rng = root.substream(g * 1000003ULL + static_cast<std::uint64_t>(b));
        reject[b] = simulate_one(omega_grid[g], rng) ? 1 : 0;
      }
    };
    if (threads > 1) {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errs(threads);
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            worker(t, threads);
          } catch (...) {
            errs[t] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    } else {
      worker(0, 1);
    }
    PowerPoint pp;
    pp.omega = omega_grid[g];
    pp.power = std::accumulate(reject.begin(), reject.end(), 0) / static_cast<double>(reps);
    pp.reps = reps;
    out.push_back(pp);
  }
  return out;
}

}  // namespace apce
