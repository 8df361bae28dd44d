#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "ushock/config.hpp"
#include "ushock/diagnostics.hpp"

namespace ushock {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitVerify = 4,
};

struct ProfileOptions {
  int index = 2;
  double nu = 120.0;
  /// explicit abscissae; when empty a uniform table on [x_min, x_max] is used
  std::vector<double> xs;
  double x_min = -10.0;
  double x_max = 10.0;
  int count = 201;
  /// CSV destination; empty writes to `out`
  std::filesystem::path output;
};

struct OdeOptions {
  double eps = 0.0;
  /// forcing g(s) = amplitude exp(-rate s)
  double amplitude = 1.0;
  double rate = 1.0;
  int n_max = 20;
  double tol = 1e-12;
  std::filesystem::path output_dir = "ushock_ode";
};

/// Verification summary beyond the bootstrap inequalities.
struct VerifyExtras {
  NuEstimate nu;
  double max_drift = 0.0;
  /// max |d_theta w (tau - t) + 1| over snapshots
  double slope_law_error = 0.0;
  double holder_min = 0.0;
  double holder_max = 0.0;
  double kappa_deviation = 0.0;
  std::vector<double> profile_distance;
  double x_norm_final = 0.0;
  double x_norm_min = 0.0;
};

VerifyExtras verify_extras(const std::vector<Snapshot> &snaps, const Params &p,
                           const Discretization &d, const DiagnosticsConfig &cfg);
nlohmann::json report_json(const BootstrapReport &r, const VerifyExtras &x);

/// Each command returns an ExitCode; progress goes to `log`.
int cmd_profile(const ProfileOptions &opt, std::ostream &out, std::ostream &log);
int cmd_simulate(const RunConfig &cfg, std::ostream &log);
int cmd_shoot(const RunConfig &cfg, std::ostream &log);
/// Optional `diagnostics` replaces the run's own diagnostics block.
int cmd_verify(const std::filesystem::path &run_dir,
               const DiagnosticsConfig *diagnostics, std::ostream &log);
/// Pure-Burgers run with the comparison file; exit 4 when max error > tol.
int cmd_oracle_burgers(const RunConfig &cfg, double tol, std::ostream &log);
int cmd_oracle_ode(const OdeOptions &opt, std::ostream &log);

/// Apply "a.b.c=value" to a config document; value is JSON, else a string.
void apply_override(nlohmann::json &doc, const std::string &assignment);

} // namespace ushock
