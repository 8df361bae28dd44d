#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace ushock {

/// Symmetric sinh-stretched grid, x_j = c sinh(y_j) with y_j uniform on [-Y, Y].
struct Grid {
  int n_nodes = 0;
  double stretch = 1.0;
  double half_width = 1.0;
  Eigen::ArrayXd x;
  /// min(x_{j+1} - x_j, x_j - x_{j-1}), one-sided at the ends.
  Eigen::ArrayXd spacing;

  int mid() const { return n_nodes / 2; }
  double x_max() const { return x(n_nodes - 1); }
  double min_spacing() const { return spacing.minCoeff(); }
};

Grid make_grid(int n_nodes, double stretch, double half_width);

/// eta_g(x) = (1 + x^4)^g
template <typename Scalar> inline Scalar eta(Scalar x, Scalar g) {
  using std::pow;
  const Scalar x2 = x * x;
  return pow(Scalar(1) + x2 * x2, g);
}

template <typename Derived>
Eigen::ArrayXd eta(const Eigen::ArrayBase<Derived> &x, double g) {
  return (1.0 + x.square().square()).pow(g);
}

/// max_j |f_j| eta_g(x_j)
double weighted_sup(const Eigen::ArrayXd &field, const Grid &grid,
                    double gamma_w);

} // namespace ushock
