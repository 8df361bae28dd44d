// Acceptance driver: one PASS/FAIL line per criterion.
//
// Exit status is 0 once every criterion has been evaluated; --strict makes any
// FAIL line turn into exit status 1.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "ushock/diagnostics.hpp"
#include "ushock/initial_data.hpp"
#include "ushock/oracles.hpp"
#include "ushock/profile.hpp"
#include "ushock/sensitivity.hpp"
#include "ushock/shooting.hpp"

using namespace ushock;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Options {
  int n_nodes = 4097;
  double epsilon = 1e-2;
  std::set<int> only;
  bool strict = false;
};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [fails: " << what << "]";
    }
  }
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// least-squares slope of y against x
double fitted_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

const Snapshot *snapshot_at(const std::vector<Snapshot> &snaps, double s) {
  for (const auto &sn : snaps)
    if (std::abs(sn.fields.s - s) < 1e-9)
      return &sn;
  return nullptr;
}

/// Tracks the largest constraint drift over every run made here.
struct DriftLog {
  double worst = 0.0;
  int runs = 0;
  void add(const EvolveResult &r) {
    worst = std::max(worst, r.max_drift);
    for (const auto &sn : r.snapshots)
      worst = std::max(worst, constraint_drift(sn.q));
    ++runs;
  }
};

DataSpec burgers_data(double eps) {
  DataSpec d = default_data_spec(eps);
  d.z0_amplitude = d.a0_amplitude = 0.0;
  return d;
}

// ---------------------------------------------------------------------------

void profile_identities(Outcome &o) {
  const auto t0 = Clock::now();
  const BurgersProfile p;
  const double expect[6] = {0.0, -1.0, 0.0, 0.0, 0.0, 120.0};
  double jet = 0.0;
  for (int n = 0; n <= 5; ++n)
    jet = std::max(jet, std::abs(profile_deriv(p, 0.0, n) - expect[n]));

  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  double residual = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng);
    residual = std::max(residual, profile_residual(p, x, profile_eval(p, x)));
  }

  std::vector<double> xs;
  for (int k = -1200; k <= 1200; ++k) {
    const double a = std::abs(k) / 200.0;
    const double m = std::pow(10.0, a) - 1.0;
    xs.push_back(k < 0 ? -m : m);
  }
  const DecayCertificate c = profile_decay_certificate(p, xs, 0.1);
  const double dt = seconds_since(t0);

  o.detail << "jet error " << fmt(jet) << ", residual " << fmt(residual)
           << ", decay certificate " << (c.passed ? "ok" : "violated") << ", "
           << fmt(dt, 2) << " s";
  o.require(jet <= 1e-8, "jet <= 1e-8");
  o.require(residual <= 1e-12, "residual <= 1e-12");
  o.require(c.passed, "decay certificate");
  o.require(dt < 5.0, "runtime < 5 s");
}

void steady_state(const Options &opt, DriftLog &drift, Outcome &o) {
  const auto t0 = Clock::now();
  const Params p = make_params(3.0, opt.epsilon, 1.0, 4, 0.1);
  const Grid g = make_grid(opt.n_nodes, 1.0, 10.0);
  const Model model(p, SolverConfig{}, g);
  DataSpec d;
  d.cutoff_profile = false;
  const SystemState u0 = build_initial(d, p, g, false);
  EvolveOptions eo;
  eo.cadence = 0.0;
  const EvolveResult r = evolve(model, u0, u0.s + 1.0, eo);
  drift.add(r);
  const double before = profile_deviation(r.snapshots.front().fields, model.disc(), 120.0);
  const double after = profile_deviation(r.snapshots.back().fields, model.disc(), 120.0);
  const double change = std::abs(after - before);
  const double dt = seconds_since(t0);
  o.detail << "change in ||W - Wbar|| " << fmt(change) << ", " << fmt(dt, 2) << " s";
  o.require(change <= 1e-5, "change <= 1e-5");
  o.require(dt < 60.0, "runtime < 1 min");
}

double oracle_error(const Options &opt, int n_nodes, DriftLog &drift) {
  const Params p = make_params(3.0, opt.epsilon, 0.5, 4, 0.1);
  const Grid g = make_grid(n_nodes, 1.0, 10.0);
  const Model model(p, SolverConfig{}, g);
  const DataSpec d = burgers_data(opt.epsilon);
  const SystemState u0 = build_initial(d, p, g, false);
  const EvolveResult r = evolve(model, u0, u0.s + 2.0, EvolveOptions{});
  drift.add(r);
  double worst = 0.0;
  for (const auto &e : burgers_selfsimilar_compare(r.snapshots, d, p, g))
    worst = std::max(worst, e.sup_error);
  return worst;
}

void oracle_equivalence(const Options &opt, DriftLog &drift, Outcome &o) {
  const auto t0 = Clock::now();
  const double e1 = oracle_error(opt, opt.n_nodes, drift);
  const double e2 = oracle_error(opt, 2 * opt.n_nodes - 1, drift);
  const double ratio = e1 / e2;
  const double dt = seconds_since(t0);
  o.detail << "sup error " << fmt(e1) << " (n = " << opt.n_nodes << "), " << fmt(e2)
           << " (n = " << 2 * opt.n_nodes - 1 << "), ratio " << fmt(ratio) << ", "
           << fmt(dt, 3) << " s";
  o.require(e1 <= 1e-4, "sup error <= 1e-4");
  o.require(ratio >= 6.0 && ratio <= 10.0, "ratio in [6, 10]");
  o.require(dt < 300.0, "runtime < 5 min");
}

struct SensitivityRuns {
  ShootingProblem prob;
  double alpha = 0.0, beta = 0.0;
  std::vector<Snapshot> snaps;
};

SensitivityRuns sensitivity_run(const Options &opt, DriftLog &drift) {
  SensitivityRuns sr{ShootingProblem{make_params(1.4, opt.epsilon, 0.5, 4, 0.1),
                                     make_grid(opt.n_nodes, 1.0, 10.0), SolverConfig{},
                                     burgers_data(opt.epsilon), ShootingConfig{}},
                     0.0, 0.0, {}};
  const Model model(sr.prob.params, sr.prob.solver, sr.prob.grid);
  std::tie(sr.alpha, sr.beta) =
      initialize_newton_seed(sr.prob.data, sr.prob.params, model.disc());
  DataSpec d = sr.prob.data;
  d.alpha = sr.alpha;
  d.beta = sr.beta;
  const SystemState u0 = build_initial(d, sr.prob.params, sr.prob.grid, true);
  const EvolveResult r = evolve(model, u0, u0.s + 4.0, EvolveOptions{});
  drift.add(r);
  sr.snaps = r.snapshots;
  return sr;
}

void jacobian_correctness(const SensitivityRuns &sr, Outcome &o) {
  const Model model(sr.prob.params, sr.prob.solver, sr.prob.grid);
  const double s0 = sr.snaps.front().fields.s;
  const double eps = sr.prob.params.epsilon;
  double worst_rel = 0.0, worst_order = HUGE_VAL;
  for (int N : {0, 2}) {
    const Snapshot *sn = snapshot_at(sr.snaps, s0 + N + 1);
    if (!sn) {
      o.require(false, "snapshot at s0 + " + std::to_string(N + 1));
      continue;
    }
    const Eigen::Matrix2d J = jacobian(*sn);
    const Eigen::Matrix2d fd = fd_jacobian(model, sr.prob, sr.alpha, sr.beta, N, 1e-6 * eps);
    const double rel = (J - fd).norm() / fd.norm();
    // order from successive differences at h, h/2, h/4; the whole ladder
    // stays above h = 2e-3, below which run-to-run noise / h takes over
    const double h = 0.8 * eps;
    const Eigen::Matrix2d d1 = fd_jacobian(model, sr.prob, sr.alpha, sr.beta, N, h);
    const Eigen::Matrix2d d2 = fd_jacobian(model, sr.prob, sr.alpha, sr.beta, N, h / 2);
    const Eigen::Matrix2d d4 = fd_jacobian(model, sr.prob, sr.alpha, sr.beta, N, h / 4);
    const double order = std::log2((d1 - d2).norm() / (d2 - d4).norm());
    o.detail << (N ? "; " : "") << "s0+" << N + 1 << ": rel " << fmt(rel) << ", FD order " << fmt(order)
             << " (differences " << fmt((d1 - d2).norm()) << ", " << fmt((d2 - d4).norm())
             << ")";
    worst_rel = std::max(worst_rel, rel);
    worst_order = std::min(worst_order, order);
  }
  o.require(worst_rel <= 1e-3, "relative difference <= 1e-3");
  o.require(worst_order >= 1.9, "FD order >= 1.9");
}

void sensitivity_growth(const SensitivityRuns &sr, Outcome &o) {
  const double s0 = sr.snaps.front().fields.s;
  std::vector<double> s, la, lb;
  for (const auto &sn : sr.snaps) {
    const double t = sn.fields.s - s0;
    if (t < 1.0 - 1e-9 || t > 4.0 + 1e-9)
      continue;
    const Eigen::Matrix2d J = jacobian(sn);
    s.push_back(sn.fields.s);
    la.push_back(std::log(std::abs(J(0, 0))));
    lb.push_back(std::log(std::abs(J(1, 1))));
  }
  const double ka = fitted_slope(s, la), kb = fitted_slope(s, lb);
  o.detail << "slope of log d_alpha q2 " << fmt(ka) << ", of log d_beta q3 " << fmt(kb)
           << " (" << s.size() << " samples)";
  o.require(ka >= 0.65 && ka <= 0.85, "alpha slope in [0.65, 0.85]");
  o.require(kb >= 0.40 && kb <= 0.60, "beta slope in [0.40, 0.60]");
}

struct ShootingRun {
  ShootingProblem prob;
  ShootingResult res;
  double seconds = 0.0;
  bool ran = false;
};

ShootingRun shooting_run(const Options &opt, DriftLog &drift) {
  ShootingRun sr{ShootingProblem{make_params(1.4, opt.epsilon, 0.5, 4, 0.1),
                                 make_grid(opt.n_nodes, 1.0, 10.0), SolverConfig{},
                                 burgers_data(opt.epsilon), ShootingConfig{}},
                 {}, 0.0, true};
  const auto t0 = Clock::now();
  sr.res = run_shooting(sr.prob, [](const ShootingIterate &it) {
    std::cerr << "  shooting N = " << it.N << "  |E| " << fmt(it.E.cwiseAbs().maxCoeff())
              << " -> " << fmt(it.E_after.cwiseAbs().maxCoeff()) << "  step "
              << fmt(it.step_norm) << "\n";
  });
  sr.seconds = seconds_since(t0);
  if (sr.res.final_run_ok)
    drift.add(sr.res.final_run);
  return sr;
}

void shooting_convergence(const ShootingRun &sr, Outcome &o) {
  const auto &its = sr.res.record.iterates;
  double worst = 0.0;
  for (const auto &it : its)
    worst = std::max(worst, it.E_after.cwiseAbs().maxCoeff());
  double worst_ratio = 0.0;
  for (std::size_t k = 3; k < its.size(); ++k)
    worst_ratio = std::max(worst_ratio, its[k].step_norm / its[k - 1].step_norm);
  o.detail << its.size() << " levels, max |q2|,|q3| " << fmt(worst)
           << ", worst increment ratio after N = 2 " << fmt(worst_ratio) << ", "
           << fmt(sr.seconds, 3) << " s";
  if (!sr.res.record.converged)
    o.detail << ", failure: " << sr.res.record.failure;
  o.require(sr.res.record.converged, "converged");
  o.require(!its.empty() && its.size() <= 6, "N <= 6");
  o.require(worst <= 1e-9, "|q2|, |q3| <= 1e-9");
  o.require(worst_ratio <= std::exp(-0.5), "increment ratio <= e^{-1/2}");
  o.require(sr.seconds < 1800.0, "runtime < 30 min");
}

/// Fit window for the converged trajectory: from s0 + 2 (past the initial
/// transient) to one unit before the last matching time s0 + n_max, where
/// q2 and q3 are forced through zero.
std::pair<double, double> decay_window(const ShootingRun &sr) {
  const double s0 = sr.res.final_run.snapshots.front().fields.s;
  const auto &sc = sr.prob.shooting;
  return {s0 + 2.0, s0 + (sc.n_max - 1) * sc.spacing};
}

void mode_decay(const ShootingRun &sr, Outcome &o) {
  if (!sr.res.final_run_ok) {
    o.require(false, "converged final run");
    return;
  }
  const auto [a, b] = decay_window(sr);
  std::vector<double> s, l2, l3;
  for (const auto &sn : sr.res.final_run.snapshots) {
    if (sn.fields.s < a - 1e-9 || sn.fields.s > b + 1e-9)
      continue;
    s.push_back(sn.fields.s);
    l2.push_back(std::log(std::abs(sn.q[2])));
    l3.push_back(std::log(std::abs(sn.q[3])));
  }
  const double k2 = fitted_slope(s, l2), k3 = fitted_slope(s, l3);
  o.detail << "slope of log|q2| " << fmt(k2) << ", of log|q3| " << fmt(k3)
           << " over s in [" << fmt(a, 4) << ", " << fmt(b, 4) << "]";
  o.require(k2 <= -0.5, "q2 slope <= -0.5");
  o.require(k3 <= -0.4, "q3 slope <= -0.4");
}

void nu_estimate_check(const ShootingRun &sr, Outcome &o) {
  if (!sr.res.final_run_ok) {
    o.require(false, "converged final run");
    return;
  }
  const auto &snaps = sr.res.final_run.snapshots;
  const NuEstimate nu = nu_estimate(snaps);
  const double eps = sr.prob.params.epsilon;
  double dk = 0.0;
  for (const auto &sn : snaps)
    dk = std::max(dk, std::abs(sn.mod.kappa - sr.prob.params.kappa0));
  o.detail << "nu " << fmt(nu.nu, 8) << " (|nu - 120| " << fmt(std::abs(nu.nu - 120.0))
           << ", settled " << (nu.settled ? "yes" : "no") << "), max |kappa - kappa0| "
           << fmt(dk);
  o.require(std::abs(nu.nu - 120.0) <= std::pow(eps, 0.75), "|nu - 120| <= eps^{3/4}");
  o.require(dk <= eps, "|kappa - kappa0| <= eps");
}

void profile_convergence(const ShootingRun &sr, Outcome &o) {
  if (!sr.res.final_run_ok || sr.res.final_run.snapshots.size() < 3) {
    o.require(false, "converged final run");
    return;
  }
  const auto &snaps = sr.res.final_run.snapshots;
  const Discretization d(sr.prob.grid, sr.prob.solver);
  const double nu = nu_estimate(snaps).nu;
  std::vector<double> dist;
  for (std::size_t k = snaps.size() - 3; k < snaps.size(); ++k)
    dist.push_back(profile_distance(snaps[k].fields, d, nu, 0.05));
  o.detail << "last three distances " << fmt(dist[0]) << ", " << fmt(dist[1]) << ", "
           << fmt(dist[2]);
  o.require(dist[1] < dist[0] && dist[2] < dist[1], "monotone decrease");
}

void blowup_laws(const ShootingRun &sr, Outcome &o) {
  if (!sr.res.final_run_ok) {
    o.require(false, "converged final run");
    return;
  }
  const auto &snaps = sr.res.final_run.snapshots;
  const Discretization d(sr.prob.grid, sr.prob.solver);
  double slope_err = 0.0, hmin = HUGE_VAL, hmax = 0.0;
  for (const auto &sn : snaps) {
    slope_err = std::max(slope_err, std::abs(slope_at_shock(sn, d) + 1.0));
    const PhysicalSlice sl = reconstruct_physical(sn, sr.prob.params, sr.prob.grid);
    const double h = holder_seminorm(sl.theta, sl.w, 0.2);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
  }
  o.detail << "max |slope (tau - t) + 1| " << fmt(slope_err) << ", Holder-1/5 in ["
           << fmt(hmin) << ", " << fmt(hmax) << "] over " << snaps.size() << " snapshots";
  o.require(slope_err <= 1e-6, "slope law to 1e-6");
  o.require(hmax <= 2.0 * hmin, "Holder seminorm within 2x");
}

void model_ode(Outcome &o) {
  const auto t0 = Clock::now();
  const auto g = [](double s) { return std::exp(-s); };
  const double a0 = model_ode_shoot(g, 0.0, 20).alpha_star;
  const ModelShootResult r1 = model_ode_shoot(g, 0.1, 20);
  const ModelShootResult r2 = model_ode_shoot(g, 0.05, 20);
  double residual = 0.0;
  for (const auto *r : {&r1, &r2})
    for (const auto &it : r->iterates)
      residual = std::max(residual, it.residual);
  const double ratio = std::abs(r1.alpha_star - a0) / std::abs(r2.alpha_star - a0);
  const double dt = seconds_since(t0);
  o.detail << "alpha*(0) + 2/3 = " << fmt(a0 + 2.0 / 3.0) << ", max |u(s_n)| "
           << fmt(residual) << ", shift ratio eps 0.1 : 0.05 = " << fmt(ratio, 4) << ", "
           << fmt(dt, 2) << " s";
  o.require(std::abs(a0 + 2.0 / 3.0) <= 1e-8, "alpha* = -2/3 to 1e-8");
  o.require(residual <= 1e-8, "|u(s_n)| <= 1e-8");
  // halving: shift ratio 2 to within 10%
  o.require(std::abs(ratio - 2.0) <= 0.2, "shift halves with eps");
  o.require(dt < 5.0, "runtime < 5 s");
}

} // namespace

int main(int argc, char **argv) {
  Options opt;
  std::vector<int> only;
  CLI::App app{"acceptance criteria"};
  app.add_option("--n-nodes", opt.n_nodes, "grid size (odd)")->check(CLI::Range(65, 1 << 16));
  app.add_option("--only", only, "evaluate only these criteria")->delimiter(',');
  app.add_flag("--strict", opt.strict, "exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);
  opt.only.insert(only.begin(), only.end());
  const auto wanted = [&](int k) { return opt.only.empty() || opt.only.count(k); };

  const auto t0 = Clock::now();
  DriftLog drift;
  std::map<int, std::string> lines;
  int failures = 0;
  const auto report = [&](int k, const Outcome &o) {
    const std::string line = "criterion " + std::to_string(k) + ": " +
                             (o.pass ? "PASS" : "FAIL") + "  " + o.detail.str();
    std::cerr << line << std::endl;
    lines[k] = line;
    failures += o.pass ? 0 : 1;
  };
  const auto run = [&](int k, const std::function<void(Outcome &)> &f) {
    if (!wanted(k))
      return;
    Outcome o;
    try {
      f(o);
    } catch (const std::exception &e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    report(k, o);
  };

  run(1, profile_identities);
  run(2, [&](Outcome &o) { steady_state(opt, drift, o); });
  run(3, [&](Outcome &o) { oracle_equivalence(opt, drift, o); });

  std::optional<SensitivityRuns> sens;
  const auto need_sens = [&]() -> const SensitivityRuns & {
    if (!sens)
      sens = sensitivity_run(opt, drift);
    return *sens;
  };
  run(5, [&](Outcome &o) { jacobian_correctness(need_sens(), o); });
  run(6, [&](Outcome &o) { sensitivity_growth(need_sens(), o); });

  std::optional<ShootingRun> shoot;
  const auto need_shoot = [&]() -> const ShootingRun & {
    if (!shoot)
      shoot = shooting_run(opt, drift);
    return *shoot;
  };
  run(7, [&](Outcome &o) { shooting_convergence(need_shoot(), o); });
  run(8, [&](Outcome &o) { mode_decay(need_shoot(), o); });
  run(9, [&](Outcome &o) { nu_estimate_check(need_shoot(), o); });
  run(10, [&](Outcome &o) { profile_convergence(need_shoot(), o); });
  run(11, [&](Outcome &o) { blowup_laws(need_shoot(), o); });
  run(12, model_ode);

  // every run above is checked against the drift bound; evolve also rejects
  // a step outright when the drift exceeds the solver tolerance
  run(4, [&](Outcome &o) {
    o.detail << "max drift " << fmt(drift.worst) << " over " << drift.runs << " runs";
    o.require(drift.runs > 0, "at least one run");
    o.require(drift.worst <= 1e-6, "drift <= 1e-6");
  });

  for (const auto &[k, line] : lines)
    std::cout << line << "\n";
  std::cout << "acceptance: " << failures << " failing, " << fmt(seconds_since(t0), 4)
            << " s total" << std::endl;
  return opt.strict && failures ? 1 : 0;
}
