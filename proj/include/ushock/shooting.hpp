#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ushock/dynamics.hpp"
#include "ushock/initial_data.hpp"

namespace ushock {

enum class JacobianSource { Sensitivity, FiniteDifference };

std::string to_string(JacobianSource j);
JacobianSource jacobian_source_from_string(const std::string &name);

struct ShootingConfig {
  int n_max = 6;
  /// absolute target on |q2|, |q3| at s_{N+1}
  double newton_tol = 1e-9;
  double cauchy_tol = 1e-10;
  JacobianSource jacobian_source = JacobianSource::Sensitivity;
  /// central-difference step in units of eps
  double fd_step = 1e-6;
  /// multiplies the widths of the admissible parameter rectangle
  double trust_scale = 1.0;
  int max_newton = 8;
  double cond_max = 1e12;
  /// time between successive targets (1 in the inductive scheme)
  double spacing = 1.0;
  /// snapshot cadence of the final run
  double final_cadence = 0.25;
  /// the final run continues this far in s past s_{n_max + 1}
  double final_extra = 0.0;
};

/// Everything needed to run the base problem from s0 for given (alpha, beta).
struct ShootingProblem {
  Params params;
  Grid grid;
  SolverConfig solver;
  DataSpec data;
  ShootingConfig shooting;
};

struct TEvaluation {
  Eigen::Vector2d E = Eigen::Vector2d::Zero();
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  bool has_jacobian = false;
};

/// (q2, q3) at s_{N+1} for a fresh run from s0; Jacobian on request.
TEvaluation evaluate_T(const Model &model, const ShootingProblem &prob,
                       double alpha, double beta, int N, bool with_jacobian);

/// Central-difference Jacobian of T_N (four runs, evaluated concurrently).
Eigen::Matrix2d fd_jacobian(const Model &model, const ShootingProblem &prob,
                            double alpha, double beta, int N, double h);

struct ShootingIterate {
  int N = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double s_N = 0.0;
  /// (q2, q3)(s_{N+1}) at (alpha_N, beta_N)
  Eigen::Vector2d E = Eigen::Vector2d::Zero();
  Eigen::Matrix2d jacobian = Eigen::Matrix2d::Zero();
  /// (q2, q3)(s_{N+1}) at (alpha_{N+1}, beta_{N+1})
  Eigen::Vector2d E_after = Eigen::Vector2d::Zero();
  double alpha_next = 0.0;
  double beta_next = 0.0;
  double step_norm = 0.0;
  double damping_used = 1.0;
  int newton_steps = 0;
  bool in_trust = true;
};

struct ShootingRecord {
  std::vector<ShootingIterate> iterates;
  bool converged = false;
  std::string failure;
};

/// Admissible half-widths of the parameter rectangle at s_N.
Eigen::Vector2d trust_widths(const Params &p, double s_N, double scale);

/// Newton correction at level N starting from (alpha, beta); appends an iterate.
/// Throws SolverError for ill-conditioned Jacobians or exhausted damping.
ShootingIterate newton_iterate(const Model &model, const ShootingProblem &prob,
                               double alpha, double beta, int N);

struct ShootingResult {
  double alpha_inf = 0.0;
  double beta_inf = 0.0;
  ShootingRecord record;
  EvolveResult final_run;
  bool final_run_ok = false;
};

ShootingResult run_shooting(const ShootingProblem &prob,
                            const std::function<void(const ShootingIterate &)>
                                &on_iterate = nullptr);

} // namespace ushock
