#include "ushock/oracles.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

namespace ushock {

namespace {

/// theta0 with theta0 + t w0(theta0) = theta; f is increasing before blow-up.
double foot(const CharacteristicSolution &cs, double theta) {
  if (!(cs.t < cs.t_star - cs.safety)) {
    std::ostringstream os;
    os << "characteristics: t = " << cs.t << " not below blow-up time "
       << cs.t_star;
    throw OracleError(os.str());
  }
  auto f = [&](double th0) { return th0 + cs.t * cs.w0(th0).v - theta; };
  const double guess = theta - cs.t * cs.w0(theta).v;
  double lo = guess, hi = guess;
  double width = std::max(1e-3, std::abs(cs.t) * (1.0 + std::abs(cs.w0(theta).v)));
  double flo = f(lo), fhi = flo;
  for (int k = 0; flo > 0.0 && k < 200; ++k) {
    lo -= width;
    width *= 2.0;
    flo = f(lo);
  }
  width = std::max(1e-3, std::abs(cs.t) * (1.0 + std::abs(cs.w0(theta).v)));
  for (int k = 0; fhi < 0.0 && k < 200; ++k) {
    hi += width;
    width *= 2.0;
    fhi = f(hi);
  }
  if (flo > 0.0 || fhi < 0.0)
    throw OracleError("characteristics: root not bracketed");

  double x = guess;
  for (int it = 0; it < 200; ++it) {
    const ValueSlope w = cs.w0(x);
    const double fx = x + cs.t * w.v - theta;
    if (std::abs(fx) <= cs.root_tol)
      return x;
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
    const double df = 1.0 + cs.t * w.d;
    double next = df > 0.0 ? x - fx / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x)))
      return x;
    x = next;
  }
  const double r = std::abs(f(x));
  if (r > cs.root_tol * (1.0 + std::abs(theta))) {
    std::ostringstream os;
    os << "characteristics: root residual " << r << " above tolerance";
    throw OracleError(os.str());
  }
  return x;
}

} // namespace

double characteristics_eval(const CharacteristicSolution &cs, double theta) {
  return cs.w0(foot(cs, theta)).v;
}

double characteristics_slope(const CharacteristicSolution &cs, double theta) {
  const ValueSlope w = cs.w0(foot(cs, theta));
  return w.d / (1.0 + cs.t * w.d);
}

std::function<ValueSlope(double)> physical_initial_w(const DataSpec &spec,
                                                     const Params &p) {
  const auto W0 = initial_W_eval(spec, p);
  const double e14 = std::pow(p.epsilon, 0.25);
  const double em54 = std::pow(p.epsilon, -1.25);
  const double k0 = p.kappa0;
  return [=](double theta) {
    const ValueSlope w = W0(theta * em54);
    return ValueSlope{e14 * w.v + k0, e14 * em54 * w.d};
  };
}

std::vector<OracleSnapshotError>
burgers_selfsimilar_compare(const std::vector<Snapshot> &snaps,
                            const DataSpec &spec, const Params &p,
                            const Grid &grid) {
  if (spec.z0_amplitude != 0.0 || spec.a0_amplitude != 0.0)
    throw OracleError("oracle comparison needs Z0 = A0 = 0");
  const auto w0 = physical_initial_w(spec, p);
  // blow-up time from the sampled minimum slope of the data
  double min_slope = 0.0;
  for (int j = 0; j < grid.n_nodes; ++j)
    min_slope = std::min(min_slope, w0(grid.x(j) * std::pow(p.epsilon, 1.25)).d);
  const double t0 = -p.epsilon;

  std::vector<OracleSnapshotError> out;
  for (const Snapshot &sn : snaps) {
    const double s = sn.fields.s;
    const double es = std::exp(-s);
    const double e4 = std::exp(0.25 * s);
    const double em54 = std::exp(-1.25 * s);
    CharacteristicSolution cs;
    cs.w0 = w0;
    cs.t = (sn.mod.tau - es) - t0;
    cs.t_star = min_slope < 0.0 ? -1.0 / min_slope
                                : std::numeric_limits<double>::infinity();
    OracleSnapshotError e;
    e.s = s;
    e.t = sn.mod.tau - es;
    for (int j = 0; j < grid.n_nodes; ++j) {
      const double x = grid.x(j);
      const double theta = sn.mod.xi + x * em54;
      const double w_ex = characteristics_eval(cs, theta);
      const double w = sn.fields.W(j) / e4 + sn.mod.kappa;
      const double err = std::abs(w - w_ex);
      if (err > e.sup_error) {
        e.sup_error = err;
        e.x_at_max = x;
      }
      e.weighted_error = std::max(e.weighted_error, err * e4 * eta(x, -0.05));
    }
    out.push_back(e);
  }
  return out;
}

ModelODESolution model_ode_solve(const ModelODE &m, double s_end,
                                 const std::vector<double> &times, double rtol,
                                 double atol) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;
  if (!std::isfinite(s_end) || s_end < 0.0)
    throw OracleError("model ODE: s_end must be finite and >= 0");
  const double eps = m.eps;
  const auto &g = m.g;
  auto sys = [&](const State &y, State &dy, double s) {
    dy[0] = 0.5 * y[0] + g(s) + eps * y[0] * y[0];
    dy[1] = 0.5 * y[1] + 2.0 * eps * y[0] * y[1];
  };
  constexpr double escape = 1e6;

  ModelODESolution sol;
  auto stepper = odeint::make_dense_output(atol, rtol,
                                           odeint::runge_kutta_dopri5<State>());
  stepper.initialize(State{m.alpha, 1.0}, 0.0, 1e-3);
  std::size_t next = 0;
  auto emit = [&](double t) {
    State y;
    stepper.calc_state(t, y);
    sol.s.push_back(t);
    sol.u.push_back(y[0]);
    sol.du_dalpha.push_back(y[1]);
  };
  while (next < times.size() && times[next] <= 0.0) {
    sol.s.push_back(times[next]);
    sol.u.push_back(m.alpha);
    sol.du_dalpha.push_back(1.0);
    ++next;
  }
  while (stepper.current_time() < s_end) {
    const double t_prev = stepper.current_time();
    stepper.do_step(sys);
    if (!std::isfinite(stepper.current_state()[0]) ||
        std::abs(stepper.current_state()[0]) > escape) {
      // locate the crossing inside the last step by bisection on the interpolant
      double lo = t_prev, hi = stepper.current_time();
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        State y;
        stepper.calc_state(mid, y);
        (std::isfinite(y[0]) && std::abs(y[0]) <= escape ? lo : hi) = mid;
      }
      sol.blew_up = true;
      sol.escape_time = hi;
      while (next < times.size() && times[next] < lo)
        emit(times[next++]);
      return sol;
    }
    while (next < times.size() && times[next] <= stepper.current_time() &&
           times[next] <= s_end)
      emit(times[next++]);
  }
  return sol;
}

ModelODESolution model_ode_duhamel(const ModelODE &m, double s_end, int n_points,
                                   int max_iter, double tol) {
  if (n_points < 2)
    throw OracleError("model ODE Duhamel: need at least 2 points");
  const double h = s_end / (n_points - 1);
  std::vector<double> s(n_points), gs(n_points), decay(n_points);
  for (int i = 0; i < n_points; ++i) {
    s[i] = i * h;
    gs[i] = m.g(s[i]);
    decay[i] = std::exp(-0.5 * s[i]);
  }
  std::vector<double> u(n_points), next(n_points);
  for (int i = 0; i < n_points; ++i)
    u[i] = m.alpha / decay[i];

  ModelODESolution sol;
  for (int it = 0; it < max_iter; ++it) {
    double acc = 0.0, change = 0.0;
    next[0] = m.alpha;
    double prev = decay[0] * (gs[0] + m.eps * u[0] * u[0]);
    for (int i = 1; i < n_points; ++i) {
      const double cur = decay[i] * (gs[i] + m.eps * u[i] * u[i]);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
      next[i] = (m.alpha + acc) / decay[i];
      change = std::max(change, std::abs(next[i] - u[i]) / (1.0 + std::abs(next[i])));
    }
    u.swap(next);
    if (!std::isfinite(change) || *std::max_element(u.begin(), u.end(), [](double a, double b) {
          return std::abs(a) < std::abs(b);
        }) > 1e6) {
      sol.blew_up = true;
      break;
    }
    if (change <= tol)
      break;
  }
  sol.s = s;
  sol.u = u;
  return sol;
}

ModelShootResult model_ode_shoot(const std::function<double(double)> &g,
                                 double eps, int n_max, double tol) {
  if (n_max < 1)
    throw OracleError("model ODE shooting: n_max must be >= 1");
  ModelShootResult res;
  double alpha = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const double sn = n;
    ModelShootIterate it;
    it.n = n;
    double resid = HUGE_VAL;
    for (int k = 0; k < 50; ++k) {
      const ModelODESolution sol = model_ode_solve({g, eps, alpha}, sn, {sn});
      if (sol.blew_up || sol.u.empty()) {
        std::ostringstream os;
        os << "model ODE shooting: trajectory escaped at s = " << sol.escape_time
           << " (n = " << n << ", alpha = " << alpha << ")";
        throw OracleError(os.str());
      }
      resid = std::abs(sol.u[0]);
      if (resid <= tol)
        break;
      const double d = sol.u[0] / sol.du_dalpha[0];
      alpha -= d;
      ++it.newton_steps;
      if (std::abs(d) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(alpha)) {
        resid = std::abs(model_ode_solve({g, eps, alpha}, sn, {sn}).u[0]);
        break;
      }
    }
    if (!(resid <= std::max(tol, 1e-8))) {
      std::ostringstream os;
      os << "model ODE shooting: Newton stalled at n = " << n
         << " with |u(s_n)| = " << resid;
      throw OracleError(os.str());
    }
    it.alpha = alpha;
    it.residual = resid;
    res.iterates.push_back(it);
  }
  res.alpha_star = alpha;
  return res;
}

} // namespace ushock
