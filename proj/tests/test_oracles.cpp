#include <doctest.h>

#include <random>

#include "ushock/oracles.hpp"

using namespace ushock;

namespace {

CharacteristicSolution with(std::function<ValueSlope(double)> w0, double t,
                            double t_star = HUGE_VAL) {
  CharacteristicSolution cs;
  cs.w0 = std::move(w0);
  cs.t = t;
  cs.t_star = t_star;
  return cs;
}

} // namespace

TEST_CASE("characteristics: closed-form cases") {
  const auto lin = with([](double x) { return ValueSlope{x, 1.0}; }, 0.7);
  for (double th : {-3.0, 0.0, 0.4, 12.0})
    CHECK(characteristics_eval(lin, th) == doctest::Approx(th / 1.7));
  const auto flat = with([](double) { return ValueSlope{2.5, 0.0}; }, 3.0);
  CHECK(characteristics_eval(flat, -1.0) == 2.5);
  for (double t : {0.1, 0.5, 0.9}) {
    const auto sn = with([](double x) { return ValueSlope{-std::sin(x), -std::cos(x)}; },
                         t, 1.0);
    CHECK(characteristics_slope(sn, 0.0) == doctest::Approx(-1.0 / (1.0 - t)));
  }
}

TEST_CASE("characteristics: implicit relation and blow-up law") {
  const auto w0 = [](double x) {
    return ValueSlope{-std::sin(x) + 0.3 * std::cos(2 * x), -std::cos(x) - 0.6 * std::sin(2 * x)};
  };
  // T* = -1 / min w0'
  double min_slope = 0.0;
  for (double x = -4.0; x <= 4.0; x += 1e-5)
    min_slope = std::min(min_slope, w0(x).d);
  const double t_star = -1.0 / min_slope;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto cs = with(w0, 0.8 * t_star, t_star);
  for (int k = 0; k < 200; ++k) {
    const double th = u(rng);
    const double w = characteristics_eval(cs, th);
    CHECK(std::abs(w - w0(th - cs.t * w).v) <= 1e-12);
  }
  // follow the steepest characteristic
  double x_star = 0.0;
  for (double x = -4.0; x <= 4.0; x += 1e-5)
    if (w0(x).d == min_slope)
      x_star = x;
  const double t = t_star - 1e-3;
  const auto late = with(w0, t, t_star);
  const double worst = characteristics_slope(late, x_star + t * w0(x_star).v);
  CHECK(worst * (t_star - t) == doctest::Approx(-1.0).epsilon(0.01));
  CHECK_THROWS_AS(characteristics_eval(with(w0, 1.01 * t_star, t_star), 0.0),
                  OracleError);
}

TEST_CASE("model ODE: homogeneous and forced linear cases") {
  std::vector<double> times = {0.0, 1.0, 2.0, 5.0};
  ModelODE m{[](double) { return 0.0; }, 0.0, 1.0};
  auto r = model_ode_solve(m, 5.0, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(r.u[k] == doctest::Approx(std::exp(times[k] / 2)).epsilon(1e-11));
    CHECK(r.du_dalpha[k] == doctest::Approx(std::exp(times[k] / 2)).epsilon(1e-11));
  }
  m = ModelODE{[](double s) { return std::exp(-s); }, 0.0, -2.0 / 3.0};
  r = model_ode_solve(m, 5.0, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(r.u[k] == doctest::Approx(-2.0 / 3.0 * std::exp(-times[k])).epsilon(1e-10));
  m.alpha = 0.0;
  r = model_ode_solve(m, 5.0, times);
  CHECK(r.u.back() ==
        doctest::Approx(2.0 / 3.0 * (std::exp(2.5) - std::exp(-5.0))).epsilon(1e-10));
}

TEST_CASE("model ODE: Duhamel fixed point agrees with the integrator") {
  const ModelODE m{[](double s) { return std::exp(-s); }, 0.1, -0.6};
  const auto d = model_ode_duhamel(m, 2.0, 4001);
  const auto r = model_ode_solve(m, 2.0, d.s);
  double worst = 0.0;
  for (std::size_t k = 0; k < d.s.size(); ++k)
    worst = std::max(worst, std::abs(d.u[k] - r.u[k]));
  CHECK(worst <= 1e-6);
}

TEST_CASE("model ODE: escape time") {
  // v = 1/u solves v' = -v/2 - 1, so u escapes at 2 log(3/2)
  const ModelODE m{[](double) { return 0.0; }, 1.0, 1.0};
  const auto r = model_ode_solve(m, 2.0, {0.0, 2.0});
  CHECK(r.blew_up);
  CHECK(r.escape_time == doctest::Approx(2.0 * std::log(1.5)).epsilon(1e-4));
}

TEST_CASE("model ODE shooting") {
  const auto g = [](double s) { return std::exp(-s); };
  const auto lin = model_ode_shoot(g, 0.0, 20);
  CHECK(std::abs(lin.alpha_star + 2.0 / 3.0) <= 1e-8);
  CHECK(model_ode_shoot([](double) { return 0.0; }, 0.0, 8).alpha_star == 0.0);
  const auto nl = model_ode_shoot(g, 0.1, 20);
  for (const auto &it : nl.iterates)
    CHECK(it.residual <= 1e-8);
  const auto half = model_ode_shoot(g, 0.05, 20);
  const double d1 = nl.alpha_star + 2.0 / 3.0, d2 = half.alpha_star + 2.0 / 3.0;
  CHECK(std::abs(d1) < 0.1);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("model ODE shooting reduces to the linear formula") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), rate(0.5, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a1 = amp(rng), a2 = amp(rng), r1 = rate(rng), r2 = rate(rng);
    const auto g = [=](double s) { return a1 * std::exp(-r1 * s) + a2 * std::exp(-r2 * s); };
    const double exact = -a1 / (r1 + 0.5) - a2 / (r2 + 0.5);
    const auto res = model_ode_shoot(g, 0.0, 30);
    CHECK(res.alpha_star == doctest::Approx(exact).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("physical initial data") {
  const Params p = make_params(1.4, 0.01, 0.5, 4, 0.1);
  DataSpec spec = default_data_spec(0.01);
  const auto w0 = physical_initial_w(spec, p);
  CHECK(w0(0.0).v == doctest::Approx(0.5));
  // slope at the origin: eps^{1/4} eps^{-5/4} W0'(0) = -1/eps
  CHECK(w0(0.0).d == doctest::Approx(-100.0));
}
