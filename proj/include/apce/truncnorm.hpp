#pragma once

#include "apce/rng.hpp"

namespace apce {

// Exact draw from N(mu, sd^2) restricted to (lo, hi]; +/-inf allowed.
// Inverse-CDF in the bulk; one-sided exponential rejection beyond 5 sd.
// Throws NumericalError if the interval is empty (lo >= hi).
double draw_truncated_normal(double mu, double sd, double lo, double hi, RngStream& rng);

// One systematic Gibbs scan over the two conditionals of a truncated
// bivariate normal with unit variances and correlation rho, started from
// (d_prev, y_prev). Valid as a transition kernel inside an outer chain;
// `sweeps` scans sharpen conditional mixing.
struct BivariatePoint {
  double d;
  double y;
};
BivariatePoint draw_truncated_bivariate(double mean_d, double mean_y, double rho,
                                        double d_lo, double d_hi, double y_lo, double y_hi,
                                        double d_prev, double y_prev, RngStream& rng,
                                        int sweeps = 2);

}  // namespace apce
