#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "ushock/grid.hpp"

namespace ushock {

/**
 * @brief Finite-difference weights on arbitrary nodes (Fornberg recursion).
 *
 * Returns a (npts x (max_order+1)) matrix whose column k holds the weights
 * of the k-th derivative at z.
 */
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
fornberg_weights(Scalar z, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &nodes,
                 int max_order) {
  const int n = static_cast<int>(nodes.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, max_order + 1);
  Scalar c1 = 1, c4 = nodes(0) - z;
  c(0, 0) = 1;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    Scalar c2 = 1;
    const Scalar c5 = c4;
    c4 = nodes(i) - z;
    for (int j = 0; j < i; ++j) {
      const Scalar c3 = nodes(i) - nodes(j);
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

/// Least-squares polynomial fit (degree 8) through the 13 nodes nearest 0.
class ZeroFit {
public:
  static constexpr int kPoints = 13;
  static constexpr int kDegree = 8;
  static constexpr int kMaxDerivative = 6;

  ZeroFit() = default;
  explicit ZeroFit(const Grid &grid);

  /// n-th derivative of the fit at 0; throws for n outside 0..6.
  double derivative(const Eigen::ArrayXd &field, int n) const;
  /// All derivatives 0..6.
  std::array<double, 7> jet(const Eigen::ArrayXd &field) const;

  int first() const { return first_; }
  const Eigen::Matrix<double, 7, kPoints> &weights() const { return w_; }

private:
  int first_ = 0;
  Eigen::Matrix<double, 7, kPoints> w_;
};

/**
 * @brief First-derivative operator for transport terms.
 *
 * Upwind-biased stencils (six points, fifth order by default; four points,
 * third order optional), one-sided at the domain edges. With `by_position`
 * the direction inside a band around x = 0 follows sign(x) instead of the
 * local speed, and the centre node uses a centred stencil. The W speed
 * vanishes at x = 0, so this keeps the operator independent of the
 * modulation rates there.
 */
class TransportOperator {
public:
  TransportOperator() = default;
  TransportOperator(const Grid &grid, int position_band, int upwind_points = 6);

  /// out_j = D u at node j.
  void apply(const Eigen::ArrayXd &u, const Eigen::ArrayXd &speed,
             Eigen::ArrayXd &out, bool by_position) const;

  /// Derivative at node j only (used by the constraint closure).
  double at(const Eigen::ArrayXd &u, double speed, int j, bool by_position) const;

  int band() const { return band_; }
  int upwind_points() const { return pts_; }

private:
  int n_ = 0;
  int mid_ = 0;
  int band_ = 0;
  int pts_ = 6;
  std::vector<int> left_start_, right_start_;
  // (n x pts) weights for speed > 0 (left) and speed <= 0 (right)
  Eigen::MatrixXd left_w_, right_w_;
  int centre_start_ = 0;
  std::vector<double> centre_w_;
};

/// Centred (9-point, one-sided near the ends) derivative of a grid field.
class GridDerivative {
public:
  static constexpr int kWidth = 9;
  GridDerivative() = default;
  GridDerivative(const Grid &grid, int max_order);

  Eigen::ArrayXd apply(const Eigen::ArrayXd &u, int order) const;
  int max_order() const { return max_order_; }

private:
  int n_ = 0;
  int max_order_ = 0;
  std::vector<int> start_;
  // weights_[order-1] is (n x kWidth)
  std::vector<Eigen::MatrixXd> weights_;
};

} // namespace ushock
