#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ushock/dynamics.hpp"
#include "ushock/initial_data.hpp"

namespace ushock {

class OracleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// w(theta, t) = w0(theta0) with theta = theta0 + t w0(theta0).
struct CharacteristicSolution {
  std::function<ValueSlope(double)> w0;
  double t = 0.0;
  double root_tol = 1e-14;
  /// blow-up time -1/min w0' when known; evaluation is refused at or past it
  double t_star = std::numeric_limits<double>::infinity();
  double safety = 1e-12;
};

double characteristics_eval(const CharacteristicSolution &cs, double theta);
/// d/dtheta of the solution, w0'(theta0) / (1 + t w0'(theta0)).
double characteristics_slope(const CharacteristicSolution &cs, double theta);

/// Physical data w0(theta) = eps^{1/4} W0(theta eps^{-5/4}) + kappa0.
std::function<ValueSlope(double)> physical_initial_w(const DataSpec &spec,
                                                     const Params &p);

struct OracleSnapshotError {
  double s = 0.0;
  double t = 0.0;
  double sup_error = 0.0;
  /// sup_j |W - W_exact| eta_{-1/20}(x_j)
  double weighted_error = 0.0;
  double x_at_max = 0.0;
};

/// Compare each snapshot's reconstructed w against the characteristics oracle.
std::vector<OracleSnapshotError>
burgers_selfsimilar_compare(const std::vector<Snapshot> &snaps,
                            const DataSpec &spec, const Params &p,
                            const Grid &grid);

struct ModelODE {
  std::function<double(double)> g;
  double eps = 0.0;
  double alpha = 0.0;
};

struct ModelODESolution {
  std::vector<double> s, u, du_dalpha;
  bool blew_up = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
};

/// Adaptive Dormand-Prince solve of (d/ds - 1/2) u = g + eps u^2, u(0) = alpha,
/// together with du/dalpha; output at `times` (sorted, within [0, s_end]).
ModelODESolution model_ode_solve(const ModelODE &m, double s_end,
                                 const std::vector<double> &times,
                                 double rtol = 1e-13, double atol = 1e-15);

/// Picard iteration of the Duhamel formula on a uniform grid (trapezoid rule).
ModelODESolution model_ode_duhamel(const ModelODE &m, double s_end, int n_points,
                                   int max_iter = 200, double tol = 1e-14);

struct ModelShootIterate {
  int n = 0;
  double alpha = 0.0;
  /// |u_alpha(s_n)| for the accepted alpha
  double residual = 0.0;
  int newton_steps = 0;
};

struct ModelShootResult {
  double alpha_star = 0.0;
  std::vector<ModelShootIterate> iterates;
};

/// Shooting with s_n = n, alpha_0 = 0: alpha_{n+1} zeroes u at s_{n+1}.
ModelShootResult model_ode_shoot(const std::function<double(double)> &g,
                                 double eps, int n_max, double tol = 1e-12);

} // namespace ushock
