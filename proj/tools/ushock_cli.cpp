#include <CLI11.hpp>
#include <iostream>

#include "ushock/commands.hpp"
#include "ushock/io.hpp"

using namespace ushock;
namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;
};

void add_run_options(CLI::App *cmd, RunOptions &o) {
  cmd->add_option("-c,--config", o.config, "run configuration (JSON)");
  cmd->add_option("--set", o.overrides, "override a key, e.g. params.epsilon=0.005")
      ->take_all();
  cmd->add_option("-o,--output", o.output, "output directory");
}

RunConfig load(const RunOptions &o) {
  nlohmann::json doc = nlohmann::json::object();
  fs::path base;
  if (!o.config.empty()) {
    try {
      doc = read_json(o.config);
    } catch (const std::runtime_error &e) {
      throw ConfigError("<file>", e.what());
    }
    base = fs::path(o.config).parent_path();
  }
  for (const auto &a : o.overrides)
    apply_override(doc, a);
  RunConfig c = parse_config(doc, base);
  if (!o.output.empty())
    c.output.directory = o.output;
  return c;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Unstable shock formation lab: modulated self-similar solver"};
  app.require_subcommand(1);

  ProfileOptions po;
  auto *profile = app.add_subcommand("profile", "table of the self-similar profile");
  profile->add_option("--index", po.index, "profile index i (x = -W - W^{2i+1})");
  profile->add_option("--nu", po.nu, "fifth derivative at 0 of the rescaled profile");
  profile->add_option("--xs", po.xs, "explicit abscissae")->delimiter(',');
  profile->add_option("--x-min", po.x_min);
  profile->add_option("--x-max", po.x_max);
  profile->add_option("--count", po.count);
  std::string profile_out;
  profile->add_option("-o,--output", profile_out, "CSV file (default stdout)");

  RunOptions so, sh, ob;
  auto *simulate = app.add_subcommand("simulate", "evolve the self-similar system");
  add_run_options(simulate, so);

  auto *shoot = app.add_subcommand("shoot", "Newton shooting over (alpha, beta)");
  add_run_options(shoot, sh);
  std::string jac;
  shoot->add_option("--jacobian", jac, "sensitivity or fd")
      ->check(CLI::IsMember({"sensitivity", "fd"}));

  auto *verify = app.add_subcommand("verify", "check a run directory");
  std::string run_dir, verify_config;
  verify->add_option("run_dir", run_dir)->required();
  verify->add_option("-c,--config", verify_config,
                     "take the diagnostics block from this configuration");

  auto *oracle_b = app.add_subcommand("oracle-burgers",
                                      "pure-Burgers run against characteristics");
  add_run_options(oracle_b, ob);
  double oracle_tol = HUGE_VAL;
  oracle_b->add_option("--tol", oracle_tol, "fail (exit 4) above this sup error");

  OdeOptions oo;
  auto *oracle_o = app.add_subcommand("oracle-ode", "shooting for the model ODE");
  oracle_o->add_option("--eps", oo.eps);
  oracle_o->add_option("--amplitude", oo.amplitude, "g(s) = amplitude exp(-rate s)");
  oracle_o->add_option("--rate", oo.rate);
  oracle_o->add_option("--n-max", oo.n_max);
  oracle_o->add_option("--tol", oo.tol);
  std::string ode_out;
  oracle_o->add_option("-o,--output", ode_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*profile) {
      po.output = profile_out;
      return cmd_profile(po, std::cout, std::cerr);
    }
    if (*simulate)
      return cmd_simulate(load(so), std::cerr);
    if (*shoot) {
      if (!jac.empty())
        sh.overrides.push_back("shooting.jacobian_source=\"" + jac + "\"");
      return cmd_shoot(load(sh), std::cerr);
    }
    if (*verify) {
      if (verify_config.empty())
        return cmd_verify(run_dir, nullptr, std::cerr);
      const RunConfig c = load(RunOptions{verify_config, {}, {}});
      return cmd_verify(run_dir, &c.diagnostics, std::cerr);
    }
    if (*oracle_b)
      return cmd_oracle_burgers(load(ob), oracle_tol, std::cerr);
    if (*oracle_o) {
      if (const char *env = std::getenv("USHOCK_OUTPUT_DIR"); env && *env)
        oo.output_dir = env;
      if (!ode_out.empty())
        oo.output_dir = ode_out;
      return cmd_oracle_ode(oo, std::cerr);
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParamError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError &e) {
    std::cerr << "solver failure at s = " << e.s() << ": " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}
