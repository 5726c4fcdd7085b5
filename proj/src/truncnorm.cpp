#include "apce/truncnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apce/errors.hpp"
#include "apce/normal.hpp"

namespace apce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailCut = 5.0;

// Robert (1995) shifted-exponential rejection on [a, b), a > 0.
double tail_draw(double a, double b, RngStream& rng) {
  const double alpha = (a + std::sqrt(a * a + 4.0)) / 2.0;
  for (;;) {
    const double z = a - std::log(rng.uniform()) / alpha;
    if (z > b) continue;
    const double dz = z - alpha;
    if (rng.uniform() <= std::exp(-0.5 * dz * dz)) return z;
  }
}

}  // namespace

double draw_truncated_normal(double mu, double sd, double lo, double hi, RngStream& rng) {
  if (!(lo < hi)) throw NumericalError("draw_truncated_normal: empty interval");
  const double a = (lo == -kInf) ? -kInf : (lo - mu) / sd;
  const double b = (hi == kInf) ? kInf : (hi - mu) / sd;

  double z;
  if (a >= kTailCut) {
    z = tail_draw(a, b, rng);
  } else if (b <= -kTailCut) {
    z = -tail_draw(-b, -a, rng);
  } else {
    const double pa = (a == -kInf) ? 0.0 : norm_cdf(a);
    const double pb = (b == kInf) ? 1.0 : norm_cdf(b);
    const double u = pa + (pb - pa) * rng.uniform();
    z = norm_quantile(u);
    z = std::max(a, std::min(b, z));  // guard quantile roundoff at box edges
  }
  return mu + sd * z;
}

BivariatePoint draw_truncated_bivariate(double mean_d, double mean_y, double rho,
                                        double d_lo, double d_hi, double y_lo, double y_hi,
                                        double d_prev, double y_prev, RngStream& rng,
                                        int sweeps) {
  if (!(d_lo < d_hi) || !(y_lo < y_hi))
    throw NumericalError("draw_truncated_bivariate: empty box");
  const double csd = std::sqrt(1.0 - rho * rho);
  double d = d_prev;
  double y = y_prev;
  for (int s = 0; s < sweeps; ++s) {
    d = draw_truncated_normal(mean_d + rho * (y - mean_y), csd, d_lo, d_hi, rng);
    y = draw_truncated_normal(mean_y + rho * (d - mean_d), csd, y_lo, y_hi, rng);
  }
  return {d, y};
}

}  // namespace apce
