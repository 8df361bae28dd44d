#include "ushock/shooting.hpp"

#include <cmath>
#include <future>
#include <sstream>

#include "ushock/sensitivity.hpp"

namespace ushock {

std::string to_string(JacobianSource j) {
  return j == JacobianSource::Sensitivity ? "sensitivity" : "fd";
}

JacobianSource jacobian_source_from_string(const std::string &name) {
  if (name == "sensitivity")
    return JacobianSource::Sensitivity;
  if (name == "fd")
    return JacobianSource::FiniteDifference;
  throw ParamError("shooting.jacobian_source",
                   "expected 'sensitivity' or 'fd', got '" + name + "'");
}

namespace {

double sup(const Eigen::Vector2d &v) { return v.cwiseAbs().maxCoeff(); }

TEvaluation run_T(const Model &model, const ShootingProblem &prob, double alpha,
                  double beta, int N, bool sens) {
  DataSpec data = prob.data;
  data.alpha = alpha;
  data.beta = beta;
  const SystemState u0 = build_initial(data, prob.params, prob.grid, sens);
  const double target = u0.s + (N + 1) * prob.shooting.spacing;
  EvolveOptions opt;
  opt.cadence = 0.0;
  EvolveResult r;
  try {
    r = evolve(model, u0, target, opt);
  } catch (const SolverError &e) {
    std::ostringstream os;
    os << e.what() << " [alpha = " << alpha << ", beta = " << beta
       << ", N = " << N << "]";
    throw SolverError(os.str(), e.s(), e.last());
  }
  const Snapshot &last = r.snapshots.back();
  TEvaluation t;
  t.E = Eigen::Vector2d(last.q[2], last.q[3]);
  if (sens) {
    t.J = jacobian(last);
    t.has_jacobian = true;
  }
  return t;
}

} // namespace

Eigen::Matrix2d fd_jacobian(const Model &model, const ShootingProblem &prob,
                            double alpha, double beta, int N, double h) {
  const double da[4] = {h, -h, 0.0, 0.0};
  const double db[4] = {0.0, 0.0, h, -h};
  std::vector<std::future<TEvaluation>> runs;
  for (int k = 0; k < 4; ++k)
    runs.push_back(std::async(std::launch::async, [&, k] {
      return run_T(model, prob, alpha + da[k], beta + db[k], N, false);
    }));
  Eigen::Vector2d e[4];
  for (int k = 0; k < 4; ++k)
    e[k] = runs[k].get().E;
  Eigen::Matrix2d J;
  J.col(0) = (e[0] - e[1]) / (2.0 * h);
  J.col(1) = (e[2] - e[3]) / (2.0 * h);
  return J;
}

TEvaluation evaluate_T(const Model &model, const ShootingProblem &prob,
                       double alpha, double beta, int N, bool with_jacobian) {
  const bool sens = with_jacobian &&
                    prob.shooting.jacobian_source == JacobianSource::Sensitivity;
  TEvaluation t = run_T(model, prob, alpha, beta, N, sens);
  if (with_jacobian && !sens) {
    t.J = fd_jacobian(model, prob, alpha, beta, N,
                      prob.shooting.fd_step * prob.params.epsilon);
    t.has_jacobian = true;
  }
  return t;
}

Eigen::Vector2d trust_widths(const Params &p, double s_N, double scale) {
  const double e = p.epsilon;
  const double wa = std::pow(e, -0.75) * std::exp(-1.75 * s_N) +
                    std::pow(e, -0.3) * std::exp(-1.5 * s_N);
  const double wb = std::pow(e, -0.5) * std::exp(-1.5 * s_N);
  return scale * Eigen::Vector2d(wa, wb);
}

ShootingIterate newton_iterate(const Model &model, const ShootingProblem &prob,
                               double alpha, double beta, int N) {
  const ShootingConfig &cfg = prob.shooting;
  ShootingIterate it;
  it.N = N;
  it.alpha = alpha;
  it.beta = beta;
  it.s_N = -std::log(prob.params.epsilon) + N * cfg.spacing;

  TEvaluation cur = evaluate_T(model, prob, alpha, beta, N, true);
  it.E = cur.E;
  it.jacobian = cur.J;
  const Eigen::Vector2d centre(alpha, beta);
  const Eigen::Vector2d widths = trust_widths(prob.params, it.s_N, cfg.trust_scale);
  Eigen::Vector2d x = centre;

  while (sup(cur.E) > cfg.newton_tol) {
    if (it.newton_steps >= cfg.max_newton) {
      std::ostringstream os;
      os << "Newton did not reach tolerance at N = " << N << " after "
         << cfg.max_newton << " steps (|E| = " << sup(cur.E) << ")";
      throw SolverError(os.str(), it.s_N);
    }
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(cur.J);
    const double smin = svd.singularValues()(1);
    const double cond = smin > 0.0 ? svd.singularValues()(0) / smin : HUGE_VAL;
    if (!(cond <= cfg.cond_max)) {
      std::ostringstream os;
      os << "ill-conditioned Jacobian at N = " << N << " (cond = " << cond << ")";
      throw SolverError(os.str(), it.s_N);
    }
    const Eigen::Vector2d d = -cur.J.fullPivLu().solve(cur.E);
    bool accepted = false;
    for (double lam : {1.0, 0.5, 0.25, 0.125}) {
      const Eigen::Vector2d cand = x + lam * d;
      if (((cand - centre).cwiseAbs().array() > widths.array()).any()) {
        it.in_trust = false;
        continue;
      }
      TEvaluation next = evaluate_T(model, prob, cand(0), cand(1), N, false);
      if (sup(next.E) < sup(cur.E)) {
        x = cand;
        it.damping_used = lam;
        if (sup(next.E) > cfg.newton_tol) {
          next = evaluate_T(model, prob, cand(0), cand(1), N, true);
        }
        cur = next;
        accepted = true;
        break;
      }
    }
    ++it.newton_steps;
    if (!accepted) {
      std::ostringstream os;
      os << "damping exhausted at N = " << N << " (|E| = " << sup(cur.E) << ")";
      throw SolverError(os.str(), it.s_N);
    }
    it.in_trust = true;
  }
  it.E_after = cur.E;
  it.alpha_next = x(0);
  it.beta_next = x(1);
  it.step_norm = std::abs(x(0) - alpha) + std::abs(x(1) - beta);
  return it;
}

ShootingResult run_shooting(
    const ShootingProblem &prob,
    const std::function<void(const ShootingIterate &)> &on_iterate) {
  if (prob.shooting.n_max < 3)
    throw ParamError("shooting.n_max", "must be >= 3");
  const Model model(prob.params, prob.solver, prob.grid);
  ShootingResult res;
  auto [alpha, beta] = initialize_newton_seed(prob.data, prob.params, model.disc());

  for (int N = 0; N < prob.shooting.n_max; ++N) {
    ShootingIterate it;
    try {
      it = newton_iterate(model, prob, alpha, beta, N);
    } catch (const SolverError &e) {
      res.record.failure = e.what();
      break;
    }
    res.record.iterates.push_back(it);
    if (on_iterate)
      on_iterate(it);
    alpha = it.alpha_next;
    beta = it.beta_next;
    if (it.step_norm <= prob.shooting.cauchy_tol) {
      res.record.converged = true;
      break;
    }
  }
  if (res.record.failure.empty())
    res.record.converged = true;
  res.alpha_inf = alpha;
  res.beta_inf = beta;

  DataSpec data = prob.data;
  data.alpha = alpha;
  data.beta = beta;
  const SystemState u0 = build_initial(data, prob.params, prob.grid, true);
  EvolveOptions opt;
  opt.cadence = prob.shooting.final_cadence;
  try {
    res.final_run = evolve(model, u0,
                           u0.s + (prob.shooting.n_max + 1) * prob.shooting.spacing +
                               prob.shooting.final_extra,
                           opt);
    res.final_run_ok = true;
  } catch (const SolverError &e) {
    if (res.record.failure.empty())
      res.record.failure = std::string("final run: ") + e.what();
    res.record.converged = false;
  }
  return res;
}

} // namespace ushock
