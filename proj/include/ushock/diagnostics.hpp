#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ushock/dynamics.hpp"
#include "ushock/profile.hpp"

namespace ushock {

/**
 * @brief Constants replacing the proof constants in the bootstrap checks.
 *
 * The defaults keep the shape of each inequality but use desk-scale values:
 * `growth` and `slope` stand in for ell log M, `base` for M in M^{n^2}.
 */
struct BootstrapConstants {
  double growth = 1.5;
  double slope = 1.5;
  double base = 4.0;
  double q3_constant = 1.0e24; // M^40 with M = 4
  double q5_floor = 100.0;
  double xi_dot_factor = 3.0;
};

struct BootstrapEntry {
  std::string name;
  std::string anchor; // the inequality being checked
  double s = 0.0;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0; // bound - value for upper bounds, value - bound for lower
  bool pass = true;
  bool hard = false;
};

/// One entry per inequality, reporting the worst snapshot.
struct BootstrapReport {
  std::vector<BootstrapEntry> entries;
  bool passed() const;
  std::vector<std::string> hard_failures() const;
  const BootstrapEntry *find(const std::string &name) const;
};

std::vector<std::string> default_hard_checks();
std::vector<std::string> all_bootstrap_checks();

BootstrapReport check_bootstraps(const std::vector<Snapshot> &snaps,
                                 const Params &p, const Discretization &d,
                                 const BootstrapConstants &c,
                                 const std::vector<std::string> &hard =
                                     default_hard_checks());

struct NuEstimate {
  double nu = 0.0;
  double extrapolated = 0.0;
  double error_estimate = 0.0;
  double drift_per_unit = 0.0;
  bool settled = false;
};

/// nu = q5 at the last snapshot; geometric extrapolation from the last three.
NuEstimate nu_estimate(const std::vector<Snapshot> &snaps,
                       double settle_tol = 1e-4);

/// max(sup |W - Wbar_nu| eta_{-1/20-delta}, max_{n<=5} sup |D^n(W - Wbar_nu)| eta_{1/5-delta})
double profile_distance(const FieldState &f, const Discretization &d, double nu,
                        double delta);

/// max(sup |W - Wbar_nu|, sup |D(W - Wbar_nu)| eta_{1/5}); no high derivatives
double profile_deviation(const FieldState &f, const Discretization &d, double nu);

struct PhysicalSlice {
  double t = 0.0;
  Eigen::ArrayXd theta, w, z, a;
  bool has_bP = false;
  Eigen::ArrayXd b, P;
};

/// Cubic (4-point Lagrange) interpolation of a grid field at x.
double interpolate_cubic(const Grid &g, const Eigen::ArrayXd &f, double x);

PhysicalSlice reconstruct_physical(const Snapshot &sn, const Params &p,
                                   const Grid &g, const Eigen::ArrayXd &theta,
                                   bool with_bP = false);
/// Slice sampled at the grid nodes themselves.
PhysicalSlice reconstruct_physical(const Snapshot &sn, const Params &p,
                                   const Grid &g, bool with_bP = false);

/// Inverse map back to self-similar fields on the grid nodes.
FieldState self_similar_from(const PhysicalSlice &sl, const Snapshot &sn,
                             const Grid &g);

/// d_theta w at theta = xi times (tau - t).
double slope_at_shock(const Snapshot &sn, const Discretization &d);

/// sup over pairs of |w(a) - w(b)| / |a - b|^exponent. Exact for n <= 2000,
/// otherwise anchors plus dyadic neighbour pairs.
double holder_seminorm(const Eigen::ArrayXd &theta, const Eigen::ArrayXd &w,
                       double exponent = 0.2);

struct Trajectory {
  std::vector<double> s, x;
  bool truncated = false;
};

/// RK4 for dPhi/ds = speed(Phi, s) on [s0, s1].
Trajectory trajectory(const std::function<double(double, double)> &speed,
                      double x0, double s0, double s1, double x_limit,
                      int steps_per_unit = 400);

/// Same with V_W rebuilt from the snapshots, linear in s between them.
Trajectory trajectory(const std::vector<Snapshot> &snaps, const Params &p,
                      const Grid &g, double x0, double s0, double s1,
                      int steps_per_unit = 400);

struct XNormComponents {
  double s = 0.0;
  double w_growth = 0.0;
  double w_derivs = 0.0;
  double q2_scaled = 0.0;
  double q3_scaled = 0.0;
  double z_sup = 0.0;
  double a_sup = 0.0;
  double z_derivs = 0.0;
  double a_derivs = 0.0;
  double total() const;
};

struct XNorm {
  std::vector<XNormComponents> instantaneous;
  /// running sup over snapshots of the total
  std::vector<double> cumulative;
};

XNorm x_norm(const std::vector<Snapshot> &snaps, const Params &p,
             const Discretization &d);

} // namespace ushock
