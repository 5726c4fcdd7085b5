#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "apce/data.hpp"

namespace apce {

// Treated fraction among cases whose hearing-date order immediately precedes
// this case's. Cases on the first date have no predecessor and are absent.
std::vector<std::optional<double>> compute_ztilde(const Dataset& ds);

struct CrtResult {
  double t_obs = 0.0;
  double p_value = 1.0;
  int s = 0;
  std::vector<double> null_draws;
};

// Conditional randomization test of no spillover: resample treatment on
// odd-order dates, recompute the exposure, and compare the squared exposure
// coefficient from the even-order regression of D on (1, Z, exposure).
// The observed statistic counts as one of the s draws, so p >= 1/s.
CrtResult crt_test(const Dataset& ds, int s, std::uint64_t seed, int threads = 1);

struct PowerPoint {
  double omega = 0.0;
  double power = 0.0;
  int reps = 0;
};

// Power simulation: ordinal-logistic decisions are regenerated with the
// exposure entering at coefficient omega (other parameters fit from the
// supplied data); each replicate is retested at level 0.05.
std::vector<PowerPoint> crt_power(const Dataset& ds, const std::vector<double>& omega_grid,
                                  int reps, int s_per_test, std::uint64_t seed,
                                  int threads = 1);

}  // namespace apce
