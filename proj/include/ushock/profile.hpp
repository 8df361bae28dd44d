#pragma once

#include <array>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <stdexcept>
#include <vector>

namespace ushock {

/// Self-similar Burgers profile defined implicitly by x = -W - W^{2i+1}.
struct BurgersProfile {
  int index_i = 2;
  double root_tol = 1e-12;
};

/// W_nu(x) = (nu/120)^{-1/4} W((nu/120)^{1/4} x)
struct RescaledProfile {
  double nu = 120.0;
  BurgersProfile base;
};

namespace detail {

template <typename Scalar> Scalar ipow(Scalar w, int k) {
  Scalar r = 1;
  for (int i = 0; i < k; ++i)
    r *= w;
  return r;
}

} // namespace detail

/// Unique real root of W^{2i+1} + W + x = 0.
template <typename Scalar> Scalar profile_eval(const BurgersProfile &p, Scalar x) {
  using std::abs;
  using std::pow;
  if (p.index_i < 1)
    throw std::invalid_argument("profile_eval: index_i must be >= 1");
  if (x == Scalar(0))
    return Scalar(0);
  if (x < Scalar(0))
    return -profile_eval<Scalar>(p, -x);
  const int k = 2 * p.index_i + 1;
  // root lies in [-min(x, x^{1/k}), 0]
  const Scalar bound = std::min(x, pow(x, Scalar(1) / k));
  auto f = [&](Scalar w) {
    const Scalar wk1 = detail::ipow(w, k - 1);
    return std::make_pair(w + wk1 * w + x, Scalar(1) + k * wk1);
  };
  const Scalar guess = x < Scalar(1) ? -x / (Scalar(1) + detail::ipow(x, k - 1))
                                     : -bound;
  std::uintmax_t iters = 200;
  const int digits = std::numeric_limits<Scalar>::digits - 2;
  Scalar w = boost::math::tools::newton_raphson_iterate(
      f, std::clamp(guess, -bound, Scalar(0)), -bound, Scalar(0), digits, iters);
  return w;
}

/// Taylor coefficients w_0..w_n of W at x from the implicit relation.
template <typename Scalar>
std::vector<Scalar> profile_taylor(const BurgersProfile &p, Scalar x, int n) {
  const int k = 2 * p.index_i + 1;
  std::vector<Scalar> w(n + 1, Scalar(0));
  w[0] = profile_eval<Scalar>(p, x);
  const Scalar denom = Scalar(1) + k * detail::ipow(w[0], k - 1);
  for (int m = 1; m <= n; ++m) {
    // coefficient of t^m in W^k with w_m = 0
    std::vector<Scalar> pw(m + 1, Scalar(0));
    pw[0] = 1;
    for (int r = 0; r < k; ++r) {
      std::vector<Scalar> next(m + 1, Scalar(0));
      for (int a = 0; a <= m; ++a)
        for (int b = 0; a + b <= m; ++b)
          next[a + b] += pw[a] * w[b];
      pw.swap(next);
    }
    const Scalar rhs = (m == 1 ? Scalar(-1) : Scalar(0)) - pw[m];
    w[m] = rhs / denom;
  }
  return w;
}

/// n-th derivative of the profile, n = 0..8.
template <typename Scalar>
Scalar profile_deriv(const BurgersProfile &p, Scalar x, int n) {
  if (n < 0 || n > 8)
    throw std::out_of_range("profile_deriv: order must be in 0..8");
  const auto w = profile_taylor<Scalar>(p, x, n);
  Scalar fact = 1;
  for (int m = 2; m <= n; ++m)
    fact *= m;
  return w[n] * fact;
}

/// |x + W + W^{2i+1}| / (1 + |x|)
template <typename Scalar>
Scalar profile_residual(const BurgersProfile &p, Scalar x, Scalar w) {
  using std::abs;
  const int k = 2 * p.index_i + 1;
  return abs(x + w + detail::ipow(w, k)) / (Scalar(1) + abs(x));
}

/// Closed form of the i = 1 profile (Cardano).
template <typename Scalar> Scalar profile_closed_form_i1(Scalar x) {
  using std::cbrt;
  using std::sqrt;
  const Scalar r = sqrt(Scalar(1) / 27 + x * x / 4);
  return cbrt(-x / 2 + r) - cbrt(x / 2 + r);
}

double rescaled_eval(const RescaledProfile &r, double x, int n);

struct DecayViolation {
  double x = 0.0;
  std::string inequality;
  double margin = 0.0;
};

struct DecayCertificate {
  bool passed = true;
  double worst_growth_margin = HUGE_VAL;   // 3/2 eta_{1/20} - |W|
  double worst_slope_margin = HUGE_VAL;    // eta_{-1/5} - |W'|
  double worst_flatness_margin = HUGE_VAL; // min over |x| >= ell of both sides
  /// sup |W^{(n)}| eta_{1/5+(n-1)/4}, n = 1..5, over the samples
  std::array<double, 5> empirical_constants{};
  std::vector<DecayViolation> violations;
};

DecayCertificate profile_decay_certificate(const BurgersProfile &p,
                                           const std::vector<double> &sample_xs,
                                           double ell);

} // namespace ushock
