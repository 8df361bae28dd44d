#include <doctest.h>

#include <random>

#include "ushock/grid.hpp"
#include "ushock/profile.hpp"

using namespace ushock;

TEST_CASE("profile jet at the origin") {
  const BurgersProfile p;
  const double expect[6] = {0.0, -1.0, 0.0, 0.0, 0.0, 120.0};
  for (int n = 0; n <= 5; ++n)
    CHECK(profile_deriv(p, 0.0, n) == doctest::Approx(expect[n]).epsilon(1e-8));
  // W = -x + x^5 - 5 x^9 + ...: orders 6 to 8 vanish
  for (int n = 6; n <= 8; ++n)
    CHECK(std::abs(profile_deriv(p, 0.0, n)) < 1e-8);
}

TEST_CASE("implicit residual and odd symmetry at random points") {
  const BurgersProfile p;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  double worst = 0.0, odd = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng);
    const double w = profile_eval(p, x);
    worst = std::max(worst, profile_residual(p, x, w));
    odd = std::max(odd, std::abs(w + profile_eval(p, -x)));
  }
  CHECK(worst <= 1e-12);
  CHECK(odd <= 1e-12);
}

TEST_CASE("profile solves the self-similar Burgers equation") {
  for (double nu : {60.0, 120.0, 240.0}) {
    RescaledProfile r;
    r.nu = nu;
    double worst = 0.0;
    for (double x = -50.0; x <= 50.0; x += 0.137) {
      const double w = rescaled_eval(r, x, 0), d = rescaled_eval(r, x, 1);
      worst = std::max(worst, std::abs(-0.25 * w + (w + 1.25 * x) * d));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("rescaled profile") {
  RescaledProfile r;
  const BurgersProfile p;
  for (double x : {-3.0, 0.2, 7.5})
    for (int n = 0; n <= 5; ++n)
      CHECK(rescaled_eval(r, x, n) == doctest::Approx(profile_deriv(p, x, n)));
  CHECK(rescaled_eval(r, 0.0, 5) == doctest::Approx(120.0));
  r.nu = 240.0;
  CHECK(rescaled_eval(r, 0.0, 5) == doctest::Approx(240.0).epsilon(1e-10));
  // derivatives agree with differences of the values
  const double h = 1e-4;
  for (double x : {-1.3, 0.4, 2.0}) {
    const double fd = (rescaled_eval(r, x + h, 0) - rescaled_eval(r, x - h, 0)) / (2 * h);
    CHECK(fd == doctest::Approx(rescaled_eval(r, x, 1)).epsilon(1e-7));
  }
  r.nu = -1.0;
  CHECK_THROWS_AS(rescaled_eval(r, 0.0, 0), std::invalid_argument);
}

TEST_CASE("derivatives agree with central differences") {
  const BurgersProfile p;
  for (double x = -10.0; x <= 10.0; x += 0.73) {
    for (int n = 1; n <= 5; ++n) {
      const double h = 1e-3 * (1.0 + std::abs(x));
      const double fd = (profile_deriv(p, x + h, n - 1) - profile_deriv(p, x - h, n - 1) -
                         (profile_deriv(p, x + 2 * h, n - 1) -
                          profile_deriv(p, x - 2 * h, n - 1)) / 8.0) /
                        (1.5 * h);
      const double exact = profile_deriv(p, x, n);
      CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("first profile matches the Cardano form") {
  BurgersProfile p;
  p.index_i = 1;
  for (double x = -100.0; x <= 100.0; x += 0.91)
    CHECK(std::abs(profile_eval(p, x) - profile_closed_form_i1(x)) <= 1e-10);
}

TEST_CASE("decay certificate") {
  std::vector<double> xs;
  for (int k = -600; k <= 600; ++k) {
    const double a = k / 100.0;
    xs.push_back(a < 0 ? -std::pow(10.0, -a) + 1.0 : std::pow(10.0, a) - 1.0);
  }
  const DecayCertificate c = profile_decay_certificate(BurgersProfile{}, xs, 0.1);
  CHECK(c.passed);
  CHECK(c.violations.empty());
  for (double k : c.empirical_constants)
    CHECK(std::isfinite(k));
  BurgersProfile bad;
  bad.index_i = 0;
  CHECK_THROWS(profile_eval(bad, 1.0));
}
