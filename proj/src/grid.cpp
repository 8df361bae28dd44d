#include "ushock/grid.hpp"

#include "ushock/params.hpp"

namespace ushock {

Grid make_grid(int n_nodes, double stretch, double half_width) {
  if (n_nodes < 129)
    throw ParamError("n_nodes", "must be >= 129");
  if (n_nodes % 2 == 0)
    throw ParamError("n_nodes", "must be odd");
  if (!(stretch > 0.0) || !std::isfinite(stretch))
    throw ParamError("stretch", "must be > 0");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw ParamError("half_width", "must be > 0");

  Grid g;
  g.n_nodes = n_nodes;
  g.stretch = stretch;
  g.half_width = half_width;
  g.x.resize(n_nodes);
  const int m = n_nodes / 2;
  const double dy = half_width / m;
  g.x(m) = 0.0;
  for (int k = 1; k <= m; ++k) {
    const double xk = stretch * std::sinh(k * dy);
    g.x(m + k) = xk;
    g.x(m - k) = -xk;
  }
  g.spacing.resize(n_nodes);
  for (int j = 0; j < n_nodes; ++j) {
    const double left = j > 0 ? g.x(j) - g.x(j - 1) : HUGE_VAL;
    const double right = j + 1 < n_nodes ? g.x(j + 1) - g.x(j) : HUGE_VAL;
    g.spacing(j) = std::min(left, right);
  }
  return g;
}

double weighted_sup(const Eigen::ArrayXd &field, const Grid &grid,
                    double gamma_w) {
  return (field.abs() * eta(grid.x, gamma_w)).maxCoeff();
}

} // namespace ushock
