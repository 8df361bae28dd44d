#include "ushock/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ushock {

namespace {

using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

VecL nodes_from(const Grid &grid, int first, int count) {
  VecL v(count);
  for (int k = 0; k < count; ++k)
    v(k) = static_cast<long double>(grid.x(first + k));
  return v;
}

} // namespace

ZeroFit::ZeroFit(const Grid &grid) {
  const int m = grid.mid();
  first_ = m - kPoints / 2;
  const long double h = grid.x(m + kPoints / 2);
  MatL V(kPoints, kDegree + 1);
  for (int i = 0; i < kPoints; ++i) {
    const long double t = grid.x(first_ + i) / h;
    long double p = 1;
    for (int k = 0; k <= kDegree; ++k) {
      V(i, k) = p;
      p *= t;
    }
  }
  const MatL P =
      V.colPivHouseholderQr().solve(MatL::Identity(kPoints, kPoints));
  long double fact = 1;
  for (int n = 0; n <= kMaxDerivative; ++n) {
    if (n > 0)
      fact *= n;
    const long double scale = fact / std::pow(h, static_cast<long double>(n));
    for (int i = 0; i < kPoints; ++i)
      w_(n, i) = static_cast<double>(P(n, i) * scale);
    // the nodes are exactly symmetric, so the weights must be too
    for (int i = 0; i < kPoints / 2; ++i) {
      const int k = kPoints - 1 - i;
      const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
      const double avg = 0.5 * (w_(n, i) + sgn * w_(n, k));
      w_(n, i) = avg;
      w_(n, k) = sgn * avg;
    }
    if (n % 2 == 1)
      w_(n, kPoints / 2) = 0.0;
  }
}

double ZeroFit::derivative(const Eigen::ArrayXd &field, int n) const {
  if (n < 0 || n > kMaxDerivative)
    throw std::out_of_range("derivative_at_zero: order must be in 0..6");
  return w_.row(n).dot(field.segment(first_, kPoints).matrix());
}

std::array<double, 7> ZeroFit::jet(const Eigen::ArrayXd &field) const {
  const Eigen::Matrix<double, 7, 1> q =
      w_ * field.segment(first_, kPoints).matrix();
  std::array<double, 7> out{};
  for (int n = 0; n < 7; ++n)
    out[n] = q(n);
  return out;
}

TransportOperator::TransportOperator(const Grid &grid, int position_band,
                                     int upwind_points)
    : n_(grid.n_nodes), mid_(grid.mid()), band_(position_band),
      pts_(upwind_points) {
  if (pts_ != 4 && pts_ != 6)
    throw std::invalid_argument("TransportOperator: upwind stencil must have 4 or 6 points");
  if (n_ < pts_ + 2 || band_ < 0 || mid_ - band_ < pts_)
    throw std::invalid_argument("TransportOperator: grid too small for band");
  left_start_.resize(n_);
  right_start_.resize(n_);
  left_w_.resize(n_, pts_);
  right_w_.resize(n_, pts_);
  auto fill = [&](int j, int start, Eigen::MatrixXd &w) {
    const VecL nodes = nodes_from(grid, start, pts_);
    const MatL c = fornberg_weights<long double>(grid.x(j), nodes, 1);
    for (int k = 0; k < pts_; ++k)
      w(j, k) = static_cast<double>(c(k, 1));
  };
  const int h = pts_ / 2;
  for (int j = 0; j < n_; ++j) {
    left_start_[j] = std::clamp(j - h, 0, n_ - pts_);
    right_start_[j] = std::clamp(j - h + 1, 0, n_ - pts_);
    fill(j, left_start_[j], left_w_);
    fill(j, right_start_[j], right_w_);
  }
  const int cp = pts_ + 1;
  centre_start_ = mid_ - cp / 2;
  const VecL nodes = nodes_from(grid, centre_start_, cp);
  const MatL c = fornberg_weights<long double>(grid.x(mid_), nodes, 1);
  centre_w_.resize(cp);
  for (int i = 0; i < cp; ++i)
    centre_w_[i] = static_cast<double>(c(i, 1));
}

double TransportOperator::at(const Eigen::ArrayXd &u, double speed, int j,
                             bool by_position) const {
  bool left = speed > 0.0;
  if (by_position && std::abs(j - mid_) <= band_) {
    if (j == mid_) {
      const double *p = u.data() + centre_start_;
      double acc = 0.0;
      for (int i = 0; i <= pts_; ++i)
        acc += centre_w_[i] * p[i];
      return acc;
    }
    left = j > mid_;
  }
  const double *p = u.data() + (left ? left_start_[j] : right_start_[j]);
  const auto w = left ? left_w_.row(j) : right_w_.row(j);
  double acc = 0.0;
  for (int k = 0; k < pts_; ++k)
    acc += w(k) * p[k];
  return acc;
}

void TransportOperator::apply(const Eigen::ArrayXd &u,
                              const Eigen::ArrayXd &speed, Eigen::ArrayXd &out,
                              bool by_position) const {
  out.resize(n_);
  for (int j = 0; j < n_; ++j)
    out(j) = at(u, speed(j), j, by_position);
}

GridDerivative::GridDerivative(const Grid &grid, int max_order)
    : n_(grid.n_nodes), max_order_(max_order) {
  if (max_order < 1 || max_order >= kWidth)
    throw std::invalid_argument("GridDerivative: bad order");
  start_.resize(n_);
  weights_.assign(max_order, Eigen::MatrixXd(n_, kWidth));
  for (int j = 0; j < n_; ++j) {
    start_[j] = std::clamp(j - kWidth / 2, 0, n_ - kWidth);
    const VecL nodes = nodes_from(grid, start_[j], kWidth);
    const MatL c = fornberg_weights<long double>(grid.x(j), nodes, max_order);
    for (int o = 1; o <= max_order; ++o)
      for (int k = 0; k < kWidth; ++k)
        weights_[o - 1](j, k) = static_cast<double>(c(k, o));
  }
}

Eigen::ArrayXd GridDerivative::apply(const Eigen::ArrayXd &u, int order) const {
  if (order < 1 || order > max_order_)
    throw std::out_of_range("GridDerivative: order out of range");
  const Eigen::MatrixXd &w = weights_[order - 1];
  Eigen::ArrayXd out(n_);
  for (int j = 0; j < n_; ++j)
    out(j) = w.row(j).dot(u.segment(start_[j], kWidth).matrix());
  return out;
}

} // namespace ushock
