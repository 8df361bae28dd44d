#pragma once

#include <Eigen/Dense>
#include <array>

namespace ushock {

/// q[n] = n-th x-derivative of W at x = 0, n = 0..6.
using QVector = std::array<double, 7>;

/// Grid samples of the self-similar unknowns at time s.
struct FieldState {
  double s = 0.0;
  Eigen::ArrayXd W, Z, A;
};

/// Modulation variables, their rates, mu and beta_tau = 1/(1 - tau_dot).
struct ModulationState {
  double tau = 0.0;
  double xi = 0.0;
  double kappa = 0.0;
  double tau_dot = 0.0;
  double xi_dot = 0.0;
  double kappa_dot = 0.0;
  double mu = 0.0;
  double beta_tau = 1.0;
};

} // namespace ushock
