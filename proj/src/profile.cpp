#include "ushock/profile.hpp"

#include "ushock/grid.hpp"

namespace ushock {

double rescaled_eval(const RescaledProfile &r, double x, int n) {
  if (!(r.nu > 0.0))
    throw std::invalid_argument("rescaled_eval: nu must be > 0");
  if (n < 0 || n > 5)
    throw std::out_of_range("rescaled_eval: order must be in 0..5");
  const double sigma = std::pow(r.nu / 120.0, 0.25);
  return std::pow(sigma, n - 1) * profile_deriv<double>(r.base, sigma * x, n);
}

DecayCertificate profile_decay_certificate(const BurgersProfile &p,
                                           const std::vector<double> &sample_xs,
                                           double ell) {
  if (p.index_i != 2)
    throw std::invalid_argument("profile_decay_certificate: requires i = 2");
  DecayCertificate cert;
  const double floor_slope = -1.0 + std::pow(ell, 7) / 50.0;
  for (double x : sample_xs) {
    const auto t = profile_taylor<double>(p, x, 5);
    const double w = t[0], w1 = t[1];
    const double growth = 1.5 * eta(x, 0.05) - std::abs(w);
    const double slope = eta(x, -0.2) - std::abs(w1);
    cert.worst_growth_margin = std::min(cert.worst_growth_margin, growth);
    cert.worst_slope_margin = std::min(cert.worst_slope_margin, slope);
    if (growth < 0)
      cert.violations.push_back({x, "|W| <= 3/2 eta_{1/20}", growth});
    if (slope < 0)
      cert.violations.push_back({x, "|W'| <= eta_{-1/5}", slope});
    if (std::abs(x) >= ell) {
      const double flat = std::min(w1 - floor_slope, -w1);
      cert.worst_flatness_margin = std::min(cert.worst_flatness_margin, flat);
      if (flat < 0)
        cert.violations.push_back(
            {x, "-1 + ell^7/50 <= W' <= 0 for |x| >= ell", flat});
    }
    double fact = 1;
    for (int n = 1; n <= 5; ++n) {
      fact *= n;
      const double c =
          std::abs(t[n] * fact) * eta(x, 0.2 + 0.25 * (n - 1));
      cert.empirical_constants[n - 1] =
          std::max(cert.empirical_constants[n - 1], c);
    }
  }
  cert.passed = cert.violations.empty();
  return cert;
}

} // namespace ushock
