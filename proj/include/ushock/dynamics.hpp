#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ushock/grid.hpp"
#include "ushock/params.hpp"
#include "ushock/state.hpp"
#include "ushock/stencil.hpp"

namespace ushock {

enum class ClosureKind {
  /// rates chosen so the discrete q0, q1, q4 functionals are stationary
  Discrete,
  /// rates from the five constraint ODEs evaluated on the fitted jets
  Formula,
};

struct SolverConfig {
  double cfl = 0.4;
  double drift_tol = 1e-6;
  double q5_floor = 50.0;
  /// maximum s-length between step-size updates
  double segment_length = 0.25;
  /// steps per segment are rounded up to a multiple of this
  int step_multiple = 4;
  /// half-width (in nodes) of the band where the W stencil direction follows sign(x)
  int central_band = 24;
  /// upwind stencil width: 6 (fifth order) or 4 (third order)
  int upwind_points = 6;
  ClosureKind closure = ClosureKind::Discrete;
  bool enforce_drift = true;
};

struct Snapshot;

/// Solver failure carrying the time and, when available, the last good snapshot.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string &what, double s,
              std::shared_ptr<const Snapshot> last = nullptr)
      : std::runtime_error(what), s_(s), last_(std::move(last)) {}
  double s() const noexcept { return s_; }
  const std::shared_ptr<const Snapshot> &last() const noexcept { return last_; }

private:
  double s_;
  std::shared_ptr<const Snapshot> last_;
};

/// Grid plus the stencils derived from it.
struct Discretization {
  Grid grid;
  ZeroFit fit;
  TransportOperator transport;
  GridDerivative derivative;

  Discretization(const Grid &g, const SolverConfig &cfg);
};

/// n-th derivative at x = 0 of the degree-8 fit through the 13 central nodes.
double derivative_at_zero(const Eigen::ArrayXd &field, const Discretization &d,
                          int n);
QVector q_vector(const Eigen::ArrayXd &W, const Discretization &d);

struct SpeedSet {
  Eigen::ArrayXd g_W, g_Z, g_A;
  Eigen::ArrayXd G_W, G_Z, G_A;
  Eigen::ArrayXd V_W, V_Z, V_A;
};

struct ForcingSet {
  Eigen::ArrayXd F_W, F_Z, F_A;
};

SpeedSet compute_speeds(const FieldState &state, const ModulationState &mod,
                        const Params &p, const Grid &grid);
ForcingSet compute_forcings(const FieldState &state, const ModulationState &mod,
                            const Params &p);

/// Values at x = 0 entering the constraint ODEs. fw holds F_W^{(n)}(0)/beta_tau,
/// which does not depend on beta_tau.
struct ModulationInputs {
  double s = 0.0;
  double kappa = 0.0;
  double beta2 = 0.0;
  QVector q{};
  /// Z^{(j)}(0), j = 0..6
  QVector z{};
  /// F_W^{(n)}(0)/beta_tau, n = 0..6
  QVector fw{};
};

/// Fixed-point solve of the constraint ODEs for (mu, tau_dot, kappa_dot, xi_dot).
/// tau, xi, kappa are copied from prev (kappa from inputs).
ModulationState solve_modulation(const ModulationInputs &in,
                                 const ModulationState &prev, double q5_floor,
                                 int max_iter = 50, double tol = 1e-12);

ModulationInputs gather_modulation_inputs(const FieldState &state, double kappa,
                                          const Params &p,
                                          const Discretization &d);

/// Closure coefficients: a = beta_tau, b = beta_tau (xi_dot - kappa) e^{s/4},
/// c = beta_tau e^{-3s/4} kappa_dot.
struct Closure {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
};

Closure closure_from(const ModulationState &mod, double s);
ModulationState modulation_from(const Closure &cl, double s, double tau,
                                double xi, double kappa, double z0,
                                const Params &p);

/// One evolving copy of the fields and the modulation variables.
struct Branch {
  Eigen::ArrayXd W, Z, A;
  double tau = 0.0;
  double xi = 0.0;
  double kappa = 0.0;
  /// low-order bits lost when accumulating W (compensated summation); may be empty
  Eigen::ArrayXd W_carry;
};

/// Base state plus zero or two parameter-derivative branches (alpha, beta).
struct SystemState {
  double s = 0.0;
  Branch base;
  std::vector<Branch> sens;
};

struct StageEval {
  Closure closure;
  std::vector<Closure> sens_closure;
  Branch rate;
  std::vector<Branch> sens_rate;
  Eigen::ArrayXd V_W, V_Z, V_A;
  Eigen::ArrayXd DW, DZ, DA;
  /// min over nodes and fields of spacing/|speed|
  double cfl_limit = HUGE_VAL;
};

/// Right-hand side machinery shared by stepping and the sensitivity branches.
class Model {
public:
  Model(const Params &p, const SolverConfig &cfg, const Grid &grid);

  StageEval evaluate(const SystemState &u) const;
  /// Right side with prescribed modulation rates (no closure solve).
  StageEval evaluate_with(const SystemState &u, const Closure &cl,
                          const std::vector<Closure> &sens_cl) const;
  Closure solve_closure(const SystemState &u) const;

  const Params &params() const { return p_; }
  const SolverConfig &config() const { return cfg_; }
  const Discretization &disc() const { return disc_; }

private:
  void check_q5(const SystemState &u) const;
  std::vector<Closure> solve_sens_closure(const SystemState &u,
                                          const Closure &cl,
                                          const StageEval &base) const;
  void assemble_base(const SystemState &u, const Closure &cl,
                     StageEval &out) const;
  void assemble_sens(const SystemState &u, const StageEval &base, int k,
                     const Closure &cc, Branch &rate) const;

  Params p_;
  SolverConfig cfg_;
  Discretization disc_;
};

/// d(W, Z, A)/ds for a given modulation state.
struct FieldRates {
  Eigen::ArrayXd dW, dZ, dA;
};
FieldRates rhs(const FieldState &state, const ModulationState &mod,
               const Model &model);

/// SSP-RK3 step; `at_u` must be model.evaluate(u). Returns the new state and
/// writes the evaluation at the new state into `at_next`.
SystemState step(const Model &model, const SystemState &u,
                 const StageEval &at_u, double ds, StageEval &at_next);

/// Sensitivity summary of one branch at a snapshot.
struct SensitivitySnapshot {
  QVector q_c{};
  double mu_c = 0.0;
  double tau_dot_c = 0.0;
  double kappa_dot_c = 0.0;
  double xi_dot_c = 0.0;
  double kappa_c = 0.0;
  double tau_c = 0.0;
  double xi_c = 0.0;
};

struct Snapshot {
  FieldState fields;
  ModulationState mod;
  QVector q{};
  std::vector<SensitivitySnapshot> sens;
  /// full sensitivity fields, kept only when requested
  std::vector<Branch> sens_fields;
};

Snapshot make_snapshot(const Model &model, const SystemState &u,
                       const StageEval &ev, bool keep_sens_fields);

struct EvolveOptions {
  /// snapshot spacing in s; 0 keeps only the endpoints
  double cadence = 0.25;
  bool keep_sens_fields = false;
  std::function<void(const Snapshot &)> observer;
};

struct EvolveResult {
  std::vector<Snapshot> snapshots;
  SystemState final_state;
  long steps = 0;
  double max_drift = 0.0;
};

EvolveResult evolve(const Model &model, const SystemState &u0, double s_target,
                    const EvolveOptions &opt);

/// max(|q0|, |q1 + 1|, |q4|)
double constraint_drift(const QVector &q);

} // namespace ushock
