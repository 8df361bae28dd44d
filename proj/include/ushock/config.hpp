#pragma once

#include <filesystem>
#include "json.hpp"
#include <stdexcept>
#include <string>
#include <vector>

#include "ushock/diagnostics.hpp"
#include "ushock/dynamics.hpp"
#include "ushock/initial_data.hpp"
#include "ushock/shooting.hpp"

namespace ushock {

/// Invalid configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string &what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

struct ParamsConfig {
  double gamma = 1.4;
  double epsilon = 1e-2;
  double kappa0 = 0.5;
  double bigM = 4.0;
  double ell = 0.1;
};

struct GridConfig {
  int n_nodes = 4097;
  double stretch = 1.0;
  double half_width = 10.0;
};

struct SimulateConfig {
  /// length of the run in s
  double duration = 2.0;
  /// write the characteristics comparison (requires zero Z and A seeds)
  bool oracle = false;
  /// start from the exact profile instead of the data ansatz
  bool profile_start = false;
};

struct DiagnosticsConfig {
  BootstrapConstants constants;
  std::vector<std::string> checks = all_bootstrap_checks();
  std::vector<std::string> hard = default_hard_checks();
  double delta = 0.05;
  double holder_exponent = 0.2;
  double nu_settle_tol = 1e-4;
};

struct OutputConfig {
  std::string directory = "ushock_out";
  double cadence = 0.25;
  /// any of "csv", "json"
  std::vector<std::string> formats = {"csv", "json"};
  bool keep_sens_fields = false;
};

struct RunConfig {
  ParamsConfig params;
  GridConfig grid;
  DataSpec data;
  SolverConfig solver;
  ShootingConfig shooting;
  DiagnosticsConfig diagnostics;
  OutputConfig output;
  SimulateConfig simulate;
  /// directory relative paths in the file are resolved against
  std::filesystem::path base_dir;
};

/// Defaults; the data block follows the epsilon given.
RunConfig default_config(double epsilon = 1e-2);

/// Parse and validate; missing keys take defaults, unknown keys are rejected.
RunConfig parse_config(const nlohmann::json &j,
                       const std::filesystem::path &base_dir = {});
RunConfig load_config(const std::filesystem::path &file);
nlohmann::json to_json(const RunConfig &cfg);

/// Full validation of an assembled config (also run by parse_config).
void validate(const RunConfig &cfg);

Params build_params(const RunConfig &cfg);
Grid build_grid(const RunConfig &cfg);
/// Reads the perturbation samples file when the kind is "samples".
DataSpec build_data(const RunConfig &cfg);
ShootingProblem build_problem(const RunConfig &cfg);

/// (x, value) pairs from a two-column CSV; a non-numeric first line is a header.
void load_samples(const std::filesystem::path &file, std::vector<double> &xs,
                  std::vector<double> &vs);

std::string to_string(ClosureKind k);
ClosureKind closure_from_string(const std::string &name);

} // namespace ushock
