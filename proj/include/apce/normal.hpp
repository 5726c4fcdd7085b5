#pragma once

// Shared scalar normal kernels: density, CDF, quantile, and the bivariate
// normal CDF used for joint decision/risk rectangle probabilities.

namespace apce {

// Standard normal density.
double norm_pdf(double x);

// Standard normal CDF, |error| < 1e-14.
double norm_cdf(double x);

// Upper tail Pr(X > x), accurate in the far right tail.
double norm_sf(double x);

// Inverse CDF (Wichura's PPND16), |error| < 1e-12 over (0,1).
double norm_quantile(double p);

// Pr(X <= h, Y <= k) for standard bivariate normal with correlation rho.
// Gauss-Legendre quadrature on the Drezner-Wesolowsky reduction,
// |error| < 1e-7 (in practice ~1e-15 for |rho| < 0.925).
double bvn_cdf(double h, double k, double rho);

// Pr(a1 < X <= b1, a2 < Y <= b2); infinite limits allowed.
double bvn_rect(double a1, double b1, double a2, double b2, double rho);

}  // namespace apce
