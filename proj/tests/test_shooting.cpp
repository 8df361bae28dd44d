#include <doctest.h>

#include "ushock/shooting.hpp"

using namespace ushock;

TEST_CASE("jacobian source names") {
  CHECK(jacobian_source_from_string("fd") == JacobianSource::FiniteDifference);
  CHECK(to_string(JacobianSource::Sensitivity) == "sensitivity");
  CHECK_THROWS_AS(jacobian_source_from_string("exact"), ParamError);
}

TEST_CASE("trust rectangle shrinks with s") {
  const Params p = make_params(1.4, 0.01, 0.5, 4, 0.1);
  const Eigen::Vector2d w0 = trust_widths(p, 4.6, 1.0);
  const Eigen::Vector2d w1 = trust_widths(p, 5.6, 1.0);
  CHECK(w1(0) < w0(0));
  CHECK(w1(1) == doctest::Approx(w0(1) * std::exp(-1.5)));
  CHECK(trust_widths(p, 4.6, 2.0)(0) == doctest::Approx(2.0 * w0(0)));
}

TEST_CASE("trivial data gives near-zero iterates") {
  DataSpec d;
  d.cutoff_profile = false;
  ShootingConfig sc;
  sc.n_max = 3;
  sc.final_extra = 0.0;
  const ShootingProblem prob{make_params(3.0, 0.01, 1.0, 4, 0.1),
                             make_grid(1025, 1.0, 10.0), SolverConfig{}, d, sc};
  const ShootingResult r = run_shooting(prob);
  INFO(r.record.failure);
  CHECK(r.record.converged);
  CHECK(r.final_run_ok);
  // only the discrete drift of the steady profile is corrected
  for (const auto &it : r.record.iterates) {
    CHECK(it.newton_steps <= 1);
    CHECK(std::abs(it.alpha_next) <= 1e-5);
    CHECK(std::abs(it.beta_next) <= 1e-5);
  }
  CHECK(std::abs(r.alpha_inf) <= 1e-5);
  CHECK(std::abs(r.beta_inf) <= 1e-5);
}

TEST_CASE("shooting converges on a coarse grid and is deterministic") {
  DataSpec d = default_data_spec(0.01);
  d.z0_amplitude = d.a0_amplitude = 0.0;
  ShootingConfig sc;
  sc.n_max = 4;
  sc.final_extra = 0.0;
  sc.final_cadence = 0.0;
  const ShootingProblem prob{make_params(1.4, 0.01, 0.5, 4, 0.1),
                             make_grid(1025, 1.0, 10.0), SolverConfig{}, d, sc};
  const ShootingResult a = run_shooting(prob);
  REQUIRE(a.record.converged);
  REQUIRE(a.record.iterates.size() == 4);
  for (const auto &it : a.record.iterates)
    CHECK(it.E_after.cwiseAbs().maxCoeff() <= sc.newton_tol);
  const auto &its = a.record.iterates;
  CHECK(its[3].step_norm < its[1].step_norm);

  const ShootingResult b = run_shooting(prob);
  CHECK(a.alpha_inf == b.alpha_inf);
  CHECK(a.beta_inf == b.beta_inf);
}
