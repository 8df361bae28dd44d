#include "ushock/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ushock/io.hpp"
#include "ushock/oracles.hpp"
#include "ushock/profile.hpp"
#include "ushock/sensitivity.hpp"

namespace ushock {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DataSpec profile_data(DataSpec d) {
  d.alpha = d.beta = 0.0;
  d.perturbation = Perturbation{};
  d.z0_amplitude = d.a0_amplitude = 0.0;
  d.cutoff_profile = false;
  return d;
}

void write_timeseries(const fs::path &file, const std::vector<Snapshot> &snaps,
                      const Discretization &d, double delta) {
  std::vector<std::string> cols = {"s",  "t",  "tau", "xi", "kappa", "tau_dot",
                                   "xi_dot", "kappa_dot", "mu"};
  for (int n = 0; n <= 6; ++n)
    cols.push_back("q" + std::to_string(n));
  cols.push_back("drift");
  cols.push_back("profile_distance");
  const bool sens = !snaps.empty() && snaps.front().sens.size() == 2;
  if (sens)
    for (const char *c : {"dq2_dalpha", "dq2_dbeta", "dq3_dalpha", "dq3_dbeta"})
      cols.push_back(c);
  CsvWriter w(file, cols);
  for (const auto &sn : snaps) {
    const auto &m = sn.mod;
    std::vector<double> row = {sn.fields.s, m.tau - std::exp(-sn.fields.s),
                               m.tau, m.xi, m.kappa, m.tau_dot, m.xi_dot,
                               m.kappa_dot, m.mu};
    for (double q : sn.q)
      row.push_back(q);
    row.push_back(constraint_drift(sn.q));
    row.push_back(sn.q[5] > 0.0 ? profile_distance(sn.fields, d, sn.q[5], delta)
                                : std::nan(""));
    if (sens) {
      const Eigen::Matrix2d J = jacobian(sn);
      row.insert(row.end(), {J(0, 0), J(0, 1), J(1, 0), J(1, 1)});
    }
    w.row(row);
  }
}

void write_series(const fs::path &dir, const std::vector<Snapshot> &snaps,
                  const Grid &g, const RunConfig &cfg) {
  for (std::size_t i = 0; i < snaps.size(); ++i)
    write_snapshot(dir / "snapshots", static_cast<int>(i), snaps[i], g,
                   cfg.output.formats);
}

json failure_json(const SolverError &e) {
  json j = {{"error", e.what()}, {"s", e.s()}};
  if (e.last())
    j["last_snapshot"] = snapshot_json(*e.last());
  return j;
}

struct SimulationOutcome {
  int code = kExitOk;
  std::vector<OracleSnapshotError> oracle;
};

SimulationOutcome simulate(const RunConfig &cfg, std::ostream &log) {
  SimulationOutcome res;
  const Params p = build_params(cfg);
  const Grid g = build_grid(cfg);
  const DataSpec data =
      cfg.simulate.profile_start ? profile_data(build_data(cfg)) : build_data(cfg);
  const fs::path dir = output_dir(cfg.output);
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(cfg));
  write_schema(dir);

  const Model model(p, cfg.solver, g);
  const SystemState u0 = build_initial(data, p, g, false);
  EvolveOptions opt;
  opt.cadence = cfg.output.cadence;
  const auto t0 = std::chrono::steady_clock::now();
  log << "simulate: n = " << g.n_nodes << ", s in [" << u0.s << ", "
      << u0.s + cfg.simulate.duration << "]\n";
  EvolveResult r;
  try {
    r = cfg.simulate.duration > 0.0
            ? evolve(model, u0, u0.s + cfg.simulate.duration, opt)
            : evolve(model, u0, u0.s, opt);
  } catch (const SolverError &e) {
    log << "simulate: solver failure: " << e.what() << "\n";
    write_json(dir / "failure.json", failure_json(e));
    res.code = kExitSolver;
    return res;
  }
  write_series(dir, r.snapshots, g, cfg);
  write_timeseries(dir / "timeseries.csv", r.snapshots, model.disc(),
                   cfg.diagnostics.delta);

  json summary = {{"steps", r.steps},
                  {"max_drift", r.max_drift},
                  {"snapshots", r.snapshots.size()},
                  {"wall_seconds", seconds_since(t0)}};
  const auto &last = r.snapshots.back();
  summary["final"] = snapshot_json(last);
  summary["final_profile_distance"] =
      profile_distance(last.fields, model.disc(), 120.0, cfg.diagnostics.delta);
  summary["final_profile_deviation"] = profile_deviation(last.fields, model.disc(), 120.0);
  if (cfg.simulate.oracle) {
    try {
      res.oracle = burgers_selfsimilar_compare(r.snapshots, data, p, g);
    } catch (const OracleError &e) {
      log << "simulate: oracle failure: " << e.what() << "\n";
      write_json(dir / "failure.json", {{"error", e.what()}});
      res.code = kExitSolver;
      return res;
    }
    CsvWriter w(dir / "oracle_burgers.csv",
                {"s", "t", "sup_error", "weighted_error", "x_at_max"});
    double worst = 0.0;
    for (const auto &e : res.oracle) {
      w.row({e.s, e.t, e.sup_error, e.weighted_error, e.x_at_max});
      worst = std::max(worst, e.sup_error);
    }
    summary["oracle_max_sup_error"] = worst;
  }
  write_json(dir / "summary.json", summary);
  log << "simulate: " << r.steps << " steps, max drift " << r.max_drift
      << ", output in " << dir.string() << "\n";
  return res;
}

json iterate_json(const ShootingIterate &it) {
  return {{"N", it.N},
          {"alpha", it.alpha},
          {"beta", it.beta},
          {"s_N", it.s_N},
          {"E", {it.E(0), it.E(1)}},
          {"jacobian", {{it.jacobian(0, 0), it.jacobian(0, 1)},
                        {it.jacobian(1, 0), it.jacobian(1, 1)}}},
          {"E_after", {it.E_after(0), it.E_after(1)}},
          {"alpha_next", it.alpha_next},
          {"beta_next", it.beta_next},
          {"step_norm", it.step_norm},
          {"damping", it.damping_used},
          {"newton_steps", it.newton_steps},
          {"in_trust", it.in_trust}};
}

} // namespace

VerifyExtras verify_extras(const std::vector<Snapshot> &snaps, const Params &p,
                           const Discretization &d, const DiagnosticsConfig &cfg) {
  VerifyExtras x;
  x.nu = nu_estimate(snaps, cfg.nu_settle_tol);
  x.holder_min = HUGE_VAL;
  for (const auto &sn : snaps) {
    x.max_drift = std::max(x.max_drift, constraint_drift(sn.q));
    x.slope_law_error =
        std::max(x.slope_law_error, std::abs(slope_at_shock(sn, d) + 1.0));
    x.kappa_deviation = std::max(x.kappa_deviation, std::abs(sn.mod.kappa - p.kappa0));
    const PhysicalSlice sl = reconstruct_physical(sn, p, d.grid);
    const double h = holder_seminorm(sl.theta, sl.w, cfg.holder_exponent);
    x.holder_min = std::min(x.holder_min, h);
    x.holder_max = std::max(x.holder_max, h);
    x.profile_distance.push_back(
        sn.q[5] > 0.0 ? profile_distance(sn.fields, d, x.nu.nu, cfg.delta)
                      : std::nan(""));
  }
  const XNorm xn = x_norm(snaps, p, d);
  x.x_norm_final = xn.instantaneous.back().total();
  x.x_norm_min = HUGE_VAL;
  for (const auto &c : xn.instantaneous)
    x.x_norm_min = std::min(x.x_norm_min, c.total());
  return x;
}

json report_json(const BootstrapReport &r, const VerifyExtras &x) {
  json entries = json::array();
  for (const auto &e : r.entries)
    entries.push_back({{"name", e.name},
                       {"anchor", e.anchor},
                       {"s", e.s},
                       {"value", e.value},
                       {"bound", e.bound},
                       {"margin", e.margin},
                       {"pass", e.pass},
                       {"hard", e.hard}});
  return {{"passed", r.passed()},
          {"hard_failures", r.hard_failures()},
          {"entries", entries},
          {"nu",
           {{"value", x.nu.nu},
            {"extrapolated", x.nu.extrapolated},
            {"error_estimate", x.nu.error_estimate},
            {"drift_per_unit", x.nu.drift_per_unit},
            {"settled", x.nu.settled}}},
          {"max_constraint_drift", x.max_drift},
          {"slope_law_error", x.slope_law_error},
          {"holder", {{"min", x.holder_min}, {"max", x.holder_max}}},
          {"kappa_deviation", x.kappa_deviation},
          {"profile_distance", x.profile_distance},
          {"x_norm", {{"final", x.x_norm_final}, {"min", x.x_norm_min}}}};
}

int cmd_profile(const ProfileOptions &opt, std::ostream &out, std::ostream &log) {
  if (opt.index < 1)
    throw ConfigError("index", "must be >= 1");
  if (!(opt.nu > 0.0))
    throw ConfigError("nu", "must be > 0");
  std::vector<double> xs = opt.xs;
  if (xs.empty()) {
    if (opt.count < 1 || !(opt.x_max >= opt.x_min))
      throw ConfigError("range", "need count >= 1 and x_max >= x_min");
    for (int k = 0; k < opt.count; ++k)
      xs.push_back(opt.count == 1 ? opt.x_min
                                  : opt.x_min + (opt.x_max - opt.x_min) * k /
                                                    (opt.count - 1));
  }
  RescaledProfile rp;
  rp.nu = opt.nu;
  rp.base.index_i = opt.index;
  std::vector<std::string> cols = {"x", "W", "W1", "W2", "W3", "W4", "W5"};
  const bool closed = opt.index == 1;
  if (closed)
    cols.push_back("W_closed");

  std::ostringstream table;
  for (std::size_t i = 0; i < cols.size(); ++i)
    table << (i ? "," : "") << cols[i];
  table << '\n';
  for (double x : xs) {
    std::vector<double> row = {x};
    for (int n = 0; n <= 5; ++n)
      row.push_back(rescaled_eval(rp, x, n));
    if (closed) {
      const double sigma = std::pow(opt.nu / 120.0, 0.25);
      row.push_back(profile_closed_form_i1(sigma * x) / sigma);
    }
    for (std::size_t i = 0; i < row.size(); ++i)
      table << (i ? "," : "") << format_double(row[i]);
    table << '\n';
  }
  if (opt.output.empty()) {
    out << table.str();
  } else {
    write_text(opt.output, table.str());
    log << "profile: " << xs.size() << " rows written to " << opt.output.string()
        << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig &cfg, std::ostream &log) {
  return simulate(cfg, log).code;
}

int cmd_oracle_burgers(const RunConfig &cfg_in, double tol, std::ostream &log) {
  RunConfig cfg = cfg_in;
  if (cfg.data.z0_amplitude != 0.0 || cfg.data.a0_amplitude != 0.0)
    log << "oracle-burgers: setting data.z0_amplitude = data.a0_amplitude = 0\n";
  cfg.data.z0_amplitude = cfg.data.a0_amplitude = 0.0;
  cfg.simulate.oracle = true;
  cfg.simulate.profile_start = false;
  const SimulationOutcome r = simulate(cfg, log);
  if (r.code != kExitOk)
    return r.code;
  double worst = 0.0;
  for (const auto &e : r.oracle) {
    log << "  s = " << std::setprecision(6) << e.s << "  sup error "
        << std::setprecision(3) << e.sup_error << "\n";
    worst = std::max(worst, e.sup_error);
  }
  if (worst > tol) {
    log << "oracle-burgers: max sup error " << worst << " exceeds " << tol << "\n";
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_shoot(const RunConfig &cfg, std::ostream &log) {
  const ShootingProblem prob = build_problem(cfg);
  const fs::path dir = output_dir(cfg.output);
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(cfg));
  write_schema(dir);
  std::ofstream jl(dir / "iterates.jsonl", std::ios::binary);
  const auto t0 = std::chrono::steady_clock::now();
  log << "shoot: n = " << prob.grid.n_nodes << ", n_max = " << cfg.shooting.n_max
      << ", jacobian = " << to_string(cfg.shooting.jacobian_source) << "\n";

  ShootingResult res = run_shooting(prob, [&](const ShootingIterate &it) {
    jl << iterate_json(it).dump() << '\n';
    jl.flush();
    log << "  N = " << it.N << "  |E| = " << std::setprecision(3)
        << it.E.cwiseAbs().maxCoeff() << " -> " << it.E_after.cwiseAbs().maxCoeff()
        << "  step " << it.step_norm << "  (" << it.newton_steps << " Newton)\n";
  });

  json summary = {{"alpha_inf", res.alpha_inf},
                  {"beta_inf", res.beta_inf},
                  {"converged", res.record.converged},
                  {"failure", res.record.failure},
                  {"levels", res.record.iterates.size()},
                  {"final_run_ok", res.final_run_ok}};
  if (res.final_run_ok) {
    const auto &snaps = res.final_run.snapshots;
    const Model model(prob.params, prob.solver, prob.grid);
    write_series(dir, snaps, prob.grid, cfg);
    write_timeseries(dir / "timeseries.csv", snaps, model.disc(),
                     cfg.diagnostics.delta);
    const NuEstimate nu = nu_estimate(snaps, cfg.diagnostics.nu_settle_tol);
    summary["nu"] = {{"value", nu.nu},
                     {"extrapolated", nu.extrapolated},
                     {"error_estimate", nu.error_estimate},
                     {"drift_per_unit", nu.drift_per_unit},
                     {"settled", nu.settled}};
    summary["max_drift"] = res.final_run.max_drift;
    summary["final"] = snapshot_json(snaps.back());
  }
  summary["wall_seconds"] = seconds_since(t0);
  write_json(dir / "summary.json", summary);
  if (!res.record.converged) {
    log << "shoot: failed: " << res.record.failure << "\n";
    return kExitSolver;
  }
  log << "shoot: alpha_inf = " << std::setprecision(17) << res.alpha_inf
      << ", beta_inf = " << res.beta_inf << "\n";
  return kExitOk;
}

int cmd_verify(const fs::path &run_dir, const DiagnosticsConfig *diagnostics,
               std::ostream &log) {
  RunArtifacts run;
  try {
    run = read_run(run_dir);
  } catch (const ConfigError &e) {
    log << "verify: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::runtime_error &e) {
    log << "verify: " << e.what() << "\n";
    return kExitConfig;
  }
  const DiagnosticsConfig &dc = diagnostics ? *diagnostics : run.config.diagnostics;
  const Params p = build_params(run.config);
  const Discretization d(build_grid(run.config), run.config.solver);
  if (run.snapshots.size() < 2) {
    log << "verify: need at least two snapshots\n";
    return kExitConfig;
  }
  BootstrapReport rep = check_bootstraps(run.snapshots, p, d, dc.constants, dc.hard);
  std::erase_if(rep.entries, [&](const BootstrapEntry &e) {
    return std::find(dc.checks.begin(), dc.checks.end(), e.name) == dc.checks.end();
  });
  const VerifyExtras extras = verify_extras(run.snapshots, p, d, dc);
  write_json(run_dir / "report.json", report_json(rep, extras));
  {
    CsvWriter w(run_dir / "margins.csv", {"check", "s", "value", "bound", "margin"});
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
      const auto &e = rep.entries[i];
      w.row({static_cast<double>(i), e.s, e.value, e.bound, e.margin});
    }
  }
  for (const auto &e : rep.entries)
    log << "  " << (e.pass ? "ok  " : (e.hard ? "FAIL" : "warn")) << " "
        << std::left << std::setw(18) << e.name << std::right
        << " margin " << std::setprecision(3) << e.margin << "  (" << e.anchor
        << ")\n";
  log << "  nu = " << std::setprecision(10) << extras.nu.nu
      << (extras.nu.settled ? "" : " (not settled)") << "\n";
  if (!rep.passed()) {
    std::string names;
    for (const auto &n : rep.hard_failures())
      names += (names.empty() ? "" : ", ") + n;
    log << "verify: failed: " << names << "\n";
    return kExitVerify;
  }
  log << "verify: passed\n";
  return kExitOk;
}

int cmd_oracle_ode(const OdeOptions &opt, std::ostream &log) {
  if (opt.n_max < 1)
    throw ConfigError("n_max", "must be >= 1");
  if (!(opt.rate > 0.0))
    throw ConfigError("rate", "must be > 0");
  const double amp = opt.amplitude, rate = opt.rate;
  const auto g = [amp, rate](double s) { return amp * std::exp(-rate * s); };
  ModelShootResult r;
  try {
    r = model_ode_shoot(g, opt.eps, opt.n_max, opt.tol);
  } catch (const OracleError &e) {
    log << "oracle-ode: " << e.what() << "\n";
    return kExitSolver;
  }
  fs::create_directories(opt.output_dir);
  {
    CsvWriter w(opt.output_dir / "oracle_ode.csv",
                {"n", "alpha", "residual", "newton_steps"});
    for (const auto &it : r.iterates)
      w.row({double(it.n), it.alpha, it.residual, double(it.newton_steps)});
  }
  // linear answer -int_0^inf exp(-s/2) g(s) ds
  const double linear = -amp / (rate + 0.5);
  write_json(opt.output_dir / "oracle_ode.json",
             {{"alpha_star", r.alpha_star},
              {"linear_alpha_star", linear},
              {"eps", opt.eps},
              {"n_max", opt.n_max}});
  log << "oracle-ode: alpha* = " << std::setprecision(17) << r.alpha_star
      << " (linear " << linear << ")\n";
  return kExitOk;
}

void apply_override(json &doc, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "expected key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error &) {
    value = text;
  }
  json *node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty())
      throw ConfigError(key, "empty key component");
    if (!node->is_object())
      *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

} // namespace ushock
