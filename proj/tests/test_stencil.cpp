#include <doctest.h>

#include "ushock/params.hpp"
#include "ushock/stencil.hpp"

using namespace ushock;

TEST_CASE("grid construction") {
  const Grid g = make_grid(1025, 1.0, 10.0);
  CHECK(g.x(g.mid()) == 0.0);
  for (int k = 1; k <= g.mid(); ++k)
    CHECK(g.x(g.mid() + k) == -g.x(g.mid() - k));
  CHECK(g.x_max() == doctest::Approx(std::sinh(10.0)));
  CHECK(g.min_spacing() == doctest::Approx(std::sinh(10.0 / 512)));
  CHECK_THROWS_AS(make_grid(1024, 1.0, 10.0), ParamError);
  CHECK_THROWS_AS(make_grid(65, 1.0, 10.0), ParamError);
  CHECK_THROWS_AS(make_grid(1025, 0.0, 10.0), ParamError);
  CHECK_THROWS_AS(make_grid(1025, 1.0, -1.0), ParamError);
}

TEST_CASE("weights and weighted sup") {
  const Grid g = make_grid(129, 1.0, 2.0);
  Eigen::ArrayXd f = Eigen::ArrayXd::Ones(g.n_nodes);
  CHECK(weighted_sup(f, g, 0.0) == 1.0);
  CHECK(weighted_sup(f, g, -0.25) == doctest::Approx(1.0));
  CHECK(eta(2.0, 0.25) == doctest::Approx(std::pow(17.0, 0.25)));
}

TEST_CASE("Fornberg weights reproduce polynomial derivatives") {
  Eigen::VectorXd nodes(5);
  nodes << -0.3, 0.1, 0.4, 1.0, 1.7;
  const Eigen::MatrixXd c = fornberg_weights(0.2, nodes, 4);
  for (int k = 0; k <= 4; ++k) {
    // d^m/dx^m x^k at 0.2
    for (int m = 0; m <= 4; ++m) {
      double exact = 0.0;
      if (m <= k) {
        double f = 1.0;
        for (int i = 0; i < m; ++i)
          f *= k - i;
        exact = f * std::pow(0.2, k - m);
      }
      double approx = 0.0;
      for (int j = 0; j < 5; ++j)
        approx += c(j, m) * std::pow(nodes(j), k);
      CHECK(approx == doctest::Approx(exact).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("zero fit is exact on degree-8 polynomials") {
  const Grid g = make_grid(2049, 1.0, 10.0);
  const ZeroFit fit(g);
  Eigen::ArrayXd f(g.n_nodes);
  const double coef[9] = {0.5, -1.0, 0.3, 2.0, -0.7, 1.1, 0.2, -0.4, 0.9};
  for (int j = 0; j < g.n_nodes; ++j) {
    double v = 0.0;
    for (int k = 8; k >= 0; --k)
      v = v * g.x(j) + coef[k];
    f(j) = v;
  }
  double fact = 1.0;
  for (int n = 0; n <= 6; ++n) {
    if (n > 0)
      fact *= n;
    // rounding grows like h^{-n}
    CHECK(fit.derivative(f, n) ==
          doctest::Approx(coef[n] * fact).epsilon(n <= 3 ? 1e-8 : 1e-4));
  }
  CHECK_THROWS_AS(fit.derivative(f, 7), std::out_of_range);
}

namespace {

double transport_error(int n, int pts) {
  const Grid g = make_grid(n, 1.0, 3.0);
  const TransportOperator op(g, 12, pts);
  Eigen::ArrayXd u(n), speed(n), out(n);
  for (int j = 0; j < n; ++j) {
    u(j) = std::sin(g.x(j));
    speed(j) = g.x(j);
  }
  op.apply(u, speed, out, true);
  double err = 0.0;
  for (int j = 0; j < n; ++j)
    err = std::max(err, std::abs(out(j) - std::cos(g.x(j))));
  return err;
}

} // namespace

TEST_CASE("transport operator orders") {
  const double e5a = transport_error(513, 6), e5b = transport_error(1025, 6);
  CHECK(std::log2(e5a / e5b) > 4.5);
  const double e3a = transport_error(513, 4), e3b = transport_error(1025, 4);
  CHECK(std::log2(e3a / e3b) > 2.7);
  const Grid g = make_grid(513, 1.0, 3.0);
  CHECK_THROWS_AS(TransportOperator(g, 12, 5), std::invalid_argument);
  const TransportOperator op(g, 12, 6);
  CHECK(op.band() == 12);
  CHECK(op.upwind_points() == 6);
}

TEST_CASE("upwind direction follows the speed outside the band") {
  const Grid g = make_grid(257, 1.0, 3.0);
  const TransportOperator op(g, 8, 6);
  // a kink at node k is seen only by stencils reaching across it
  const int k = 200;
  Eigen::ArrayXd u = Eigen::ArrayXd::Zero(g.n_nodes);
  for (int j = k; j < g.n_nodes; ++j)
    u(j) = g.x(j) - g.x(k);
  // speed > 0 at node k-3: nodes k-6..k-1, all left of the kink
  CHECK(std::abs(op.at(u, 1.0, k - 3, false)) < 1e-12);
  // speed < 0 at node k-1: nodes k-3..k+2 straddle it
  CHECK(std::abs(op.at(u, -1.0, k - 1, false)) > 1e-3);
}

TEST_CASE("grid derivative") {
  const Grid g = make_grid(1025, 1.0, 3.0);
  const GridDerivative d(g, 3);
  Eigen::ArrayXd u(g.n_nodes);
  for (int j = 0; j < g.n_nodes; ++j)
    u(j) = std::exp(0.1 * g.x(j));
  for (int m = 1; m <= 3; ++m) {
    const Eigen::ArrayXd du = d.apply(u, m);
    const double err = (du - std::pow(0.1, m) * u).abs().maxCoeff();
    CHECK(err < 1e-6);
  }
  CHECK(d.max_order() == 3);
}
