#pragma once

#include <Eigen/Dense>

#include "ushock/dynamics.hpp"

namespace ushock {

/// Per-branch parameter derivatives, c in {alpha, beta}.
struct SensitivityBranch {
  Eigen::ArrayXd W_c, Z_c, A_c;
  double mu_c = 0.0;
  double tau_dot_c = 0.0;
  double kappa_dot_c = 0.0;
  double xi_dot_c = 0.0;
  double kappa_c = 0.0;
  double tau_c = 0.0;
  double xi_c = 0.0;
  QVector q_c{};
};

struct SensitivityState {
  SensitivityBranch alpha, beta;
};

struct ModulationSensitivity {
  double mu_c = 0.0;
  double tau_dot_c = 0.0;
  double kappa_dot_c = 0.0;
  double xi_dot_c = 0.0;
};

/// Parameter derivatives of the quantities in ModulationInputs.
struct SensitivityInputs {
  QVector q_c{};
  QVector z_c{};
  /// d/dc of F_W^{(n)}(0)/beta_tau
  QVector fw_c{};
  double kappa_c = 0.0;
};

/// Exact linearization of solve_modulation at its fixed point.
ModulationSensitivity
solve_modulation_sensitivities(const ModulationInputs &in,
                               const ModulationState &mod,
                               const SensitivityInputs &sin, double q5_floor);

SensitivityInputs gather_sensitivity_inputs(const SystemState &u, int branch,
                                            const Params &p,
                                            const Discretization &d);

/// d/ds of each sensitivity branch (fields and tau_c, xi_c, kappa_c).
std::vector<Branch> sensitivity_rhs(const SystemState &u, const Model &model);

/// Modulation sensitivities of every branch at the state u.
std::vector<ModulationSensitivity>
modulation_sensitivities(const SystemState &u, const Model &model);

/// [[d_alpha q2, d_beta q2], [d_alpha q3, d_beta q3]]
Eigen::Matrix2d jacobian(const Snapshot &snap);
Eigen::Matrix2d jacobian(const SystemState &u, const Discretization &d);

/// Package a snapshot's sensitivity content in the public layout.
SensitivityState sensitivity_state(const Snapshot &snap);

} // namespace ushock
