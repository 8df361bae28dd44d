#include "ushock/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ushock/sensitivity.hpp"

namespace ushock {

namespace {

constexpr int kConstraintOrders[3] = {0, 1, 4};

Branch lincomb(double a, const Branch &x, double b, const Branch &y) {
  Branch r;
  r.W = a * x.W + b * y.W;
  r.Z = a * x.Z + b * y.Z;
  r.A = a * x.A + b * y.A;
  r.tau = a * x.tau + b * y.tau;
  r.xi = a * x.xi + b * y.xi;
  r.kappa = a * x.kappa + b * y.kappa;
  return r;
}

// x + ds * rate
Branch advance(const Branch &x, double ds, const Branch &rate) {
  return lincomb(1.0, x, ds, rate);
}

SystemState advance(const SystemState &u, double ds, const StageEval &ev) {
  SystemState r;
  r.s = u.s + ds;
  r.base = advance(u.base, ds, ev.rate);
  r.sens.reserve(u.sens.size());
  for (std::size_t k = 0; k < u.sens.size(); ++k)
    r.sens.push_back(advance(u.sens[k], ds, ev.sens_rate[k]));
  return r;
}

SystemState blend(double a, const SystemState &x, double b,
                  const SystemState &y) {
  SystemState r;
  r.s = a * x.s + b * y.s;
  r.base = lincomb(a, x.base, b, y.base);
  for (std::size_t k = 0; k < x.sens.size(); ++k)
    r.sens.push_back(lincomb(a, x.sens[k], b, y.sens[k]));
  return r;
}

void guard_finite(const Eigen::ArrayXd &f, const char *name, double s) {
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    if (!std::isfinite(f(j))) {
      std::ostringstream os;
      os << "non-finite " << name << " at node " << j << " (s = " << s << ")";
      throw SolverError(os.str(), s);
    }
  }
}

const Grid &checked(const Grid &g, const SolverConfig &cfg) {
  if (cfg.central_band < ZeroFit::kPoints / 2)
    throw ParamError("solver.central_band", "must cover the 13 central nodes");
  if (cfg.upwind_points != 4 && cfg.upwind_points != 6)
    throw ParamError("solver.upwind_points", "must be 4 or 6");
  if (g.mid() - cfg.central_band < cfg.upwind_points)
    throw ParamError("solver.central_band", "too wide for the grid");
  return g;
}

} // namespace

Discretization::Discretization(const Grid &g, const SolverConfig &cfg)
    : grid(checked(g, cfg)), fit(g), transport(g, cfg.central_band, cfg.upwind_points),
      derivative(g, 6) {}

double derivative_at_zero(const Eigen::ArrayXd &field, const Discretization &d,
                          int n) {
  return d.fit.derivative(field, n);
}

QVector q_vector(const Eigen::ArrayXd &W, const Discretization &d) {
  return d.fit.jet(W);
}

double constraint_drift(const QVector &q) {
  return std::max({std::abs(q[0]), std::abs(q[1] + 1.0), std::abs(q[4])});
}

Closure closure_from(const ModulationState &mod, double s) {
  Closure cl;
  cl.a = mod.beta_tau;
  cl.b = mod.beta_tau * (mod.xi_dot - mod.kappa) * std::exp(0.25 * s);
  cl.c = mod.beta_tau * std::exp(-0.75 * s) * mod.kappa_dot;
  return cl;
}

ModulationState modulation_from(const Closure &cl, double s, double tau,
                                double xi, double kappa, double z0,
                                const Params &p) {
  ModulationState m;
  m.tau = tau;
  m.xi = xi;
  m.kappa = kappa;
  m.beta_tau = cl.a;
  m.tau_dot = 1.0 - 1.0 / cl.a;
  m.xi_dot = kappa + cl.b * std::exp(-0.25 * s) / cl.a;
  m.kappa_dot = cl.c * std::exp(0.75 * s) / cl.a;
  m.mu = -cl.b + cl.a * p.beta2 * std::exp(0.25 * s) * z0;
  return m;
}

SpeedSet compute_speeds(const FieldState &st, const ModulationState &mod,
                        const Params &p, const Grid &grid) {
  const Closure cl = closure_from(mod, st.s);
  const double E = std::exp(0.25 * st.s);
  const double k = mod.kappa;
  SpeedSet sp;
  sp.G_W = cl.a * p.beta2 * E * st.Z - cl.b;
  sp.g_W = cl.a * st.W + sp.G_W;
  sp.G_Z = cl.a * E * ((p.beta2 - 1.0) * k + st.Z) - cl.b;
  sp.g_Z = cl.a * p.beta2 * st.W + sp.G_Z;
  sp.G_A = cl.a * E * ((p.beta1 - 1.0) * k + p.beta1 * st.Z) - cl.b;
  sp.g_A = cl.a * p.beta1 * st.W + sp.G_A;
  sp.V_W = sp.g_W + 1.25 * grid.x;
  sp.V_Z = sp.g_Z + 1.25 * grid.x;
  sp.V_A = sp.g_A + 1.25 * grid.x;
  return sp;
}

ForcingSet compute_forcings(const FieldState &st, const ModulationState &mod,
                            const Params &p) {
  const double bt = mod.beta_tau;
  const double em1 = std::exp(-st.s);
  const Eigen::ArrayXd X = std::exp(-0.25 * st.s) * st.W + mod.kappa;
  ForcingSet f;
  f.F_W = -bt * std::exp(-0.75 * st.s) * st.A * (p.beta3 * st.Z + p.beta4 * X);
  f.F_Z = -bt * em1 * st.A * (p.beta3 * X + p.beta4 * st.Z);
  f.F_A = bt * em1 *
          (-2.0 * p.beta1 * st.A.square() + 0.5 * p.beta1 * (X + st.Z).square() -
           p.beta5 * (X - st.Z).square());
  return f;
}

ModulationState solve_modulation(const ModulationInputs &in,
                                 const ModulationState &prev, double q5_floor,
                                 int max_iter, double tol) {
  const auto &q = in.q;
  if (!(std::abs(q[5]) >= q5_floor)) {
    std::ostringstream os;
    os << "profile degeneracy: |q5| = " << std::abs(q[5]) << " below floor "
       << q5_floor;
    throw SolverError(os.str(), in.s);
  }
  const double E = std::exp(0.25 * in.s);
  const double binom4[5] = {1, 4, 6, 4, 1};
  double bt = 1.0 / (1.0 - prev.tau_dot);
  ModulationState m = prev;
  m.kappa = in.kappa;
  double mu_old = HUGE_VAL, td_old = HUGE_VAL, kd_old = HUGE_VAL;
  for (int it = 0; it < max_iter; ++it) {
    auto G = [&](int j) { return bt * in.beta2 * E * in.z[j]; };
    auto F = [&](int n) { return bt * in.fw[n]; };
    double num = F(4) - 10.0 * bt * q[2] * q[3];
    for (int j = 2; j <= 4; ++j)
      num -= binom4[j] * G(j) * q[5 - j];
    const double mu = num / q[5];
    const double tau_dot = (G(1) - mu * q[2] + F(1)) / bt;
    const double kappa_dot = std::exp(0.75 * in.s) * (mu + F(0)) / bt;
    const double xi_dot = in.kappa + in.beta2 * in.z[0] - mu / (E * bt);
    m.mu = mu;
    m.tau_dot = tau_dot;
    m.kappa_dot = kappa_dot;
    m.xi_dot = xi_dot;
    m.beta_tau = 1.0 / (1.0 - tau_dot);
    const bool done = std::abs(mu - mu_old) <= tol &&
                      std::abs(tau_dot - td_old) <= tol &&
                      std::abs(kappa_dot - kd_old) <= tol;
    if (done)
      return m;
    mu_old = mu;
    td_old = tau_dot;
    kd_old = kappa_dot;
    bt = m.beta_tau;
  }
  throw SolverError("modulation fixed point did not converge", in.s);
}

ModulationInputs gather_modulation_inputs(const FieldState &st, double kappa,
                                          const Params &p,
                                          const Discretization &d) {
  ModulationInputs in;
  in.s = st.s;
  in.kappa = kappa;
  in.beta2 = p.beta2;
  in.q = d.fit.jet(st.W);
  in.z = d.fit.jet(st.Z);
  in.z[0] = st.Z(d.grid.mid());
  const int f0 = d.fit.first();
  const int np = ZeroFit::kPoints;
  const double em34 = std::exp(-0.75 * st.s);
  const double emq = std::exp(-0.25 * st.s);
  Eigen::ArrayXd fw = Eigen::ArrayXd::Zero(d.grid.n_nodes);
  for (int j = f0; j < f0 + np; ++j) {
    const double X = emq * st.W(j) + kappa;
    fw(j) = -em34 * st.A(j) * (p.beta3 * st.Z(j) + p.beta4 * X);
  }
  in.fw = d.fit.jet(fw);
  return in;
}

Model::Model(const Params &p, const SolverConfig &cfg, const Grid &grid)
    : p_(p), cfg_(cfg), disc_(grid, cfg) {}

void Model::check_q5(const SystemState &u) const {
  const double q5 = disc_.fit.derivative(u.base.W, 5);
  if (!(std::abs(q5) >= cfg_.q5_floor)) {
    std::ostringstream os;
    os << "profile degeneracy: |q5| = " << std::abs(q5) << " below floor "
       << cfg_.q5_floor;
    throw SolverError(os.str(), u.s);
  }
}

Closure Model::solve_closure(const SystemState &u) const {
  const Branch &b = u.base;
  const double s = u.s;
  if (cfg_.closure == ClosureKind::Formula) {
    FieldState fs{s, b.W, b.Z, b.A};
    const ModulationInputs in = gather_modulation_inputs(fs, b.kappa, p_, disc_);
    const ModulationState m = solve_modulation(in, ModulationState{},
                                               cfg_.q5_floor);
    Closure cl;
    cl.a = m.beta_tau;
    cl.b = -m.mu + cl.a * p_.beta2 * std::exp(0.25 * s) * in.z[0];
    cl.c = m.mu + cl.a * in.fw[0];
    return cl;
  }
  const double E = std::exp(0.25 * s);
  const double emq = 1.0 / E;
  const double em34 = std::exp(-0.75 * s);
  const int f0 = disc_.fit.first();
  constexpr int np = ZeroFit::kPoints;
  Eigen::Matrix<double, np, 1> R0, R1, D, one;
  for (int i = 0; i < np; ++i) {
    const int j = f0 + i;
    const double dw = disc_.transport.at(b.W, 0.0, j, true);
    const double X = emq * b.W(j) + b.kappa;
    const double fW = -em34 * b.A(j) * (p_.beta3 * b.Z(j) + p_.beta4 * X);
    R0(i) = 0.25 * b.W(j) - 1.25 * disc_.grid.x(j) * dw;
    R1(i) = -(b.W(j) + p_.beta2 * E * b.Z(j)) * dw + fW;
    D(i) = dw;
    one(i) = 1.0;
  }
  Eigen::Matrix3d M;
  Eigen::Vector3d r;
  for (int row = 0; row < 3; ++row) {
    const auto L = disc_.fit.weights().row(kConstraintOrders[row]);
    M(row, 0) = L.dot(R1);
    M(row, 1) = L.dot(D);
    M(row, 2) = -L.dot(one);
    r(row) = -L.dot(R0);
  }
  const Eigen::Vector3d sol = M.fullPivLu().solve(r);
  return Closure{sol(0), sol(1), sol(2)};
}

std::vector<Closure> Model::solve_sens_closure(const SystemState &u,
                                               const Closure &cl,
                                               const StageEval &base) const {
  std::vector<Closure> out;
  if (u.sens.empty())
    return out;
  const Branch &b = u.base;
  const double s = u.s;
  const double E = std::exp(0.25 * s);
  if (cfg_.closure == ClosureKind::Formula) {
    FieldState fs{s, b.W, b.Z, b.A};
    const ModulationInputs in = gather_modulation_inputs(fs, b.kappa, p_, disc_);
    const ModulationState m = solve_modulation(in, ModulationState{},
                                               cfg_.q5_floor);
    for (std::size_t k = 0; k < u.sens.size(); ++k) {
      const SensitivityInputs si =
          gather_sensitivity_inputs(u, static_cast<int>(k), p_, disc_);
      const ModulationSensitivity ms =
          solve_modulation_sensitivities(in, m, si, cfg_.q5_floor);
      Closure cc;
      cc.a = m.beta_tau * m.beta_tau * ms.tau_dot_c;
      cc.b = -ms.mu_c + cc.a * p_.beta2 * E * in.z[0] +
             cl.a * p_.beta2 * E * si.z_c[0];
      cc.c = ms.mu_c + cc.a * in.fw[0] + cl.a * si.fw_c[0];
      out.push_back(cc);
    }
    return out;
  }
  const double emq = 1.0 / E;
  const double em34 = std::exp(-0.75 * s);
  const int f0 = disc_.fit.first();
  constexpr int np = ZeroFit::kPoints;
  Eigen::Matrix<double, np, 1> R1, D, one;
  for (int i = 0; i < np; ++i) {
    const int j = f0 + i;
    const double dw = base.DW(j);
    const double X = emq * b.W(j) + b.kappa;
    const double fW = -em34 * b.A(j) * (p_.beta3 * b.Z(j) + p_.beta4 * X);
    R1(i) = -(b.W(j) + p_.beta2 * E * b.Z(j)) * dw + fW;
    D(i) = dw;
    one(i) = 1.0;
  }
  Eigen::Matrix3d M;
  for (int row = 0; row < 3; ++row) {
    const auto L = disc_.fit.weights().row(kConstraintOrders[row]);
    M(row, 0) = L.dot(R1);
    M(row, 1) = L.dot(D);
    M(row, 2) = -L.dot(one);
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  for (const Branch &c : u.sens) {
    Eigen::Matrix<double, np, 1> S0;
    for (int i = 0; i < np; ++i) {
      const int j = f0 + i;
      const double dwc = disc_.transport.at(c.W, 0.0, j, true);
      const double X = emq * b.W(j) + b.kappa;
      const double Xc = emq * c.W(j) + c.kappa;
      const double fWc = -em34 * (c.A(j) * (p_.beta3 * b.Z(j) + p_.beta4 * X) +
                                  b.A(j) * (p_.beta3 * c.Z(j) + p_.beta4 * Xc));
      S0(i) = 0.25 * c.W(j) - base.V_W(j) * dwc -
              cl.a * (c.W(j) + p_.beta2 * E * c.Z(j)) * base.DW(j) + cl.a * fWc;
    }
    Eigen::Vector3d r;
    for (int row = 0; row < 3; ++row)
      r(row) = -disc_.fit.weights().row(kConstraintOrders[row]).dot(S0);
    const Eigen::Vector3d sol = lu.solve(r);
    out.push_back(Closure{sol(0), sol(1), sol(2)});
  }
  return out;
}

void Model::assemble_base(const SystemState &u, const Closure &cl,
                          StageEval &ev) const {
  const Branch &b = u.base;
  const Params &p = p_;
  const Grid &g = disc_.grid;
  const int n = g.n_nodes;
  const double s = u.s;
  const double E = std::exp(0.25 * s);
  const double emq = 1.0 / E;
  const double em34 = std::exp(-0.75 * s);
  const double em1 = std::exp(-s);
  const double k = b.kappa;
  const double a = cl.a, bb = cl.b, c = cl.c;

  ev.closure = cl;
  ev.V_W.resize(n);
  ev.V_Z.resize(n);
  ev.V_A.resize(n);
  for (int j = 0; j < n; ++j) {
    const double W = b.W(j), Z = b.Z(j), x54 = 1.25 * g.x(j);
    ev.V_W(j) = a * (W + p.beta2 * E * Z) - bb + x54;
    ev.V_Z(j) = a * (p.beta2 * W + E * ((p.beta2 - 1.0) * k + Z)) - bb + x54;
    ev.V_A(j) =
        a * (p.beta1 * W + E * ((p.beta1 - 1.0) * k + p.beta1 * Z)) - bb + x54;
  }
  disc_.transport.apply(b.W, ev.V_W, ev.DW, true);
  disc_.transport.apply(b.Z, ev.V_Z, ev.DZ, false);
  disc_.transport.apply(b.A, ev.V_A, ev.DA, false);

  Branch &r = ev.rate;
  r.W.resize(n);
  r.Z.resize(n);
  r.A.resize(n);
  double lim = HUGE_VAL;
  for (int j = 0; j < n; ++j) {
    const double W = b.W(j), Z = b.Z(j), A = b.A(j);
    const double X = emq * W + k;
    const double fW = -em34 * A * (p.beta3 * Z + p.beta4 * X);
    const double fZ = -em1 * A * (p.beta3 * X + p.beta4 * Z);
    const double fA = em1 * (-2.0 * p.beta1 * A * A +
                             0.5 * p.beta1 * (X + Z) * (X + Z) -
                             p.beta5 * (X - Z) * (X - Z));
    r.W(j) = 0.25 * W - ev.V_W(j) * ev.DW(j) - c + a * fW;
    r.Z(j) = -ev.V_Z(j) * ev.DZ(j) + a * fZ;
    r.A(j) = -ev.V_A(j) * ev.DA(j) + a * fA;
    const double vmax = std::max(
        {std::abs(ev.V_W(j)), std::abs(ev.V_Z(j)), std::abs(ev.V_A(j))});
    if (vmax > 0.0)
      lim = std::min(lim, g.spacing(j) / vmax);
  }
  r.tau = (a - 1.0) * em1;
  r.xi = (k * a + bb * emq) * em1;
  r.kappa = c * emq;
  ev.cfl_limit = lim;
  guard_finite(r.W, "dW/ds", s);
  guard_finite(r.Z, "dZ/ds", s);
  guard_finite(r.A, "dA/ds", s);
  if (!std::isfinite(a) || !std::isfinite(bb) || !std::isfinite(c))
    throw SolverError("non-finite modulation rates", s);
}

void Model::assemble_sens(const SystemState &u, const StageEval &ev, int kb,
                          const Closure &cc, Branch &r) const {
  const Branch &b = u.base;
  const Branch &cb = u.sens[kb];
  const Params &p = p_;
  const int n = disc_.grid.n_nodes;
  const double s = u.s;
  const double E = std::exp(0.25 * s);
  const double emq = 1.0 / E;
  const double em34 = std::exp(-0.75 * s);
  const double em1 = std::exp(-s);
  const double k = b.kappa, kc = cb.kappa;
  const double a = ev.closure.a;
  const double ac = cc.a, bc = cc.b, c_c = cc.c;

  Eigen::ArrayXd DWc, DZc, DAc;
  disc_.transport.apply(cb.W, ev.V_W, DWc, true);
  disc_.transport.apply(cb.Z, ev.V_Z, DZc, false);
  disc_.transport.apply(cb.A, ev.V_A, DAc, false);

  r.W.resize(n);
  r.Z.resize(n);
  r.A.resize(n);
  for (int j = 0; j < n; ++j) {
    const double W = b.W(j), Z = b.Z(j), A = b.A(j);
    const double Wc = cb.W(j), Zc = cb.Z(j), Ac = cb.A(j);
    const double X = emq * W + k;
    const double Xc = emq * Wc + kc;
    const double VWc = ac * (W + p.beta2 * E * Z) +
                       a * (Wc + p.beta2 * E * Zc) - bc;
    const double VZc = ac * (p.beta2 * W + E * ((p.beta2 - 1.0) * k + Z)) +
                       a * (p.beta2 * Wc + E * ((p.beta2 - 1.0) * kc + Zc)) -
                       bc;
    const double VAc =
        ac * (p.beta1 * W + E * ((p.beta1 - 1.0) * k + p.beta1 * Z)) +
        a * (p.beta1 * Wc + E * ((p.beta1 - 1.0) * kc + p.beta1 * Zc)) - bc;
    const double fW = -em34 * A * (p.beta3 * Z + p.beta4 * X);
    const double fWc = -em34 * (Ac * (p.beta3 * Z + p.beta4 * X) +
                                A * (p.beta3 * Zc + p.beta4 * Xc));
    const double fZ = -em1 * A * (p.beta3 * X + p.beta4 * Z);
    const double fZc = -em1 * (Ac * (p.beta3 * X + p.beta4 * Z) +
                               A * (p.beta3 * Xc + p.beta4 * Zc));
    const double fA = em1 * (-2.0 * p.beta1 * A * A +
                             0.5 * p.beta1 * (X + Z) * (X + Z) -
                             p.beta5 * (X - Z) * (X - Z));
    const double fAc = em1 * (-4.0 * p.beta1 * A * Ac +
                              p.beta1 * (X + Z) * (Xc + Zc) -
                              2.0 * p.beta5 * (X - Z) * (Xc - Zc));
    r.W(j) = 0.25 * Wc - ev.V_W(j) * DWc(j) - VWc * ev.DW(j) - c_c + ac * fW +
             a * fWc;
    r.Z(j) = -ev.V_Z(j) * DZc(j) - VZc * ev.DZ(j) + ac * fZ + a * fZc;
    r.A(j) = -ev.V_A(j) * DAc(j) - VAc * ev.DA(j) + ac * fA + a * fAc;
  }
  r.tau = ac * em1;
  r.xi = (kc * a + k * ac + bc * emq) * em1;
  r.kappa = c_c * emq;
  guard_finite(r.W, "dW_c/ds", s);
  guard_finite(r.Z, "dZ_c/ds", s);
  guard_finite(r.A, "dA_c/ds", s);
}

StageEval Model::evaluate(const SystemState &u) const {
  check_q5(u);
  const Closure cl = solve_closure(u);
  StageEval ev;
  assemble_base(u, cl, ev);
  ev.sens_closure = solve_sens_closure(u, cl, ev);
  ev.sens_rate.resize(u.sens.size());
  for (std::size_t k = 0; k < u.sens.size(); ++k)
    assemble_sens(u, ev, static_cast<int>(k), ev.sens_closure[k],
                  ev.sens_rate[k]);
  return ev;
}

StageEval Model::evaluate_with(const SystemState &u, const Closure &cl,
                               const std::vector<Closure> &sens_cl) const {
  StageEval ev;
  assemble_base(u, cl, ev);
  ev.sens_closure = sens_cl;
  ev.sens_rate.resize(u.sens.size());
  for (std::size_t k = 0; k < u.sens.size(); ++k)
    assemble_sens(u, ev, static_cast<int>(k), sens_cl.at(k), ev.sens_rate[k]);
  return ev;
}

FieldRates rhs(const FieldState &state, const ModulationState &mod,
               const Model &model) {
  SystemState u;
  u.s = state.s;
  u.base.W = state.W;
  u.base.Z = state.Z;
  u.base.A = state.A;
  u.base.tau = mod.tau;
  u.base.xi = mod.xi;
  u.base.kappa = mod.kappa;
  const StageEval ev = model.evaluate_with(u, closure_from(mod, state.s), {});
  return FieldRates{ev.rate.W, ev.rate.Z, ev.rate.A};
}

SystemState step(const Model &model, const SystemState &u,
                 const StageEval &at_u, double ds, StageEval &at_next) {
  const double limit = model.config().cfl * at_u.cfl_limit;
  if (ds > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "CFL violation: ds = " << ds << " exceeds " << limit;
    throw SolverError(os.str(), u.s);
  }
  const SystemState u1 = advance(u, ds, at_u);
  const StageEval e1 = model.evaluate(u1);
  SystemState u2 = blend(0.75, u, 0.25, advance(u1, ds, e1));
  u2.s = u.s + 0.5 * ds;
  const StageEval e2 = model.evaluate(u2);
  SystemState u3 = blend(1.0 / 3.0, u, 2.0 / 3.0, advance(u2, ds, e2));
  u3.s = u.s + ds;
  // The constraint functionals amplify rounding in W by ~h^-4, so the W
  // update is re-done as u + ds (k1 + k2 + 4 k3)/6 with Kahan summation.
  auto kahan = [ds](const Branch &x, const Branch &k1, const Branch &k2,
                    const Branch &k3, Branch &out) {
    const Eigen::ArrayXd inc = (ds / 6.0) * (k1.W + k2.W + 4.0 * k3.W);
    const Eigen::ArrayXd y =
        x.W_carry.size() == inc.size() ? Eigen::ArrayXd(inc - x.W_carry) : inc;
    out.W = x.W + y;
    out.W_carry = (out.W - x.W) - y;
  };
  kahan(u.base, at_u.rate, e1.rate, e2.rate, u3.base);
  for (std::size_t k = 0; k < u.sens.size(); ++k)
    kahan(u.sens[k], at_u.sens_rate[k], e1.sens_rate[k], e2.sens_rate[k],
          u3.sens[k]);
  at_next = model.evaluate(u3);
  return u3;
}

Snapshot make_snapshot(const Model &model, const SystemState &u,
                       const StageEval &ev, bool keep_sens_fields) {
  const Params &p = model.params();
  const Discretization &d = model.disc();
  const int mid = d.grid.mid();
  Snapshot sn;
  sn.fields = FieldState{u.s, u.base.W, u.base.Z, u.base.A};
  sn.mod = modulation_from(ev.closure, u.s, u.base.tau, u.base.xi,
                           u.base.kappa, u.base.Z(mid), p);
  sn.q = d.fit.jet(u.base.W);
  const double E = std::exp(0.25 * u.s);
  const Closure &cl = ev.closure;
  for (std::size_t k = 0; k < u.sens.size(); ++k) {
    const Branch &c = u.sens[k];
    const Closure &cc = ev.sens_closure[k];
    SensitivitySnapshot ss;
    ss.q_c = d.fit.jet(c.W);
    ss.tau_dot_c = cc.a / (cl.a * cl.a);
    ss.kappa_dot_c =
        std::exp(0.75 * u.s) * (cc.c / cl.a - cl.c * cc.a / (cl.a * cl.a));
    ss.xi_dot_c = c.kappa + (cc.b / cl.a - cl.b * cc.a / (cl.a * cl.a)) / E;
    ss.mu_c = -cc.b + cc.a * p.beta2 * E * u.base.Z(mid) +
              cl.a * p.beta2 * E * c.Z(mid);
    ss.kappa_c = c.kappa;
    ss.tau_c = c.tau;
    ss.xi_c = c.xi;
    sn.sens.push_back(ss);
  }
  if (keep_sens_fields)
    sn.sens_fields = u.sens;
  return sn;
}

EvolveResult evolve(const Model &model, const SystemState &u0, double s_target,
                    const EvolveOptions &opt) {
  if (!(s_target >= u0.s - 1e-12))
    throw std::invalid_argument("evolve: s_target precedes the initial time");
  const SolverConfig &cfg = model.config();
  const Discretization &d = model.disc();

  std::vector<double> marks{u0.s};
  if (opt.cadence > 0.0) {
    for (int k = 1;; ++k) {
      const double t = u0.s + k * opt.cadence;
      if (t >= s_target - 1e-9)
        break;
      marks.push_back(t);
    }
  }
  if (s_target > u0.s + 1e-12)
    marks.push_back(s_target);

  EvolveResult res;
  SystemState u = u0;
  StageEval ev;
  std::shared_ptr<Snapshot> last;
  auto emit = [&]() {
    Snapshot sn = make_snapshot(model, u, ev, opt.keep_sens_fields);
    res.max_drift = std::max(res.max_drift, constraint_drift(sn.q));
    if (opt.observer)
      opt.observer(sn);
    last = std::make_shared<Snapshot>(sn);
    res.snapshots.push_back(std::move(sn));
  };

  try {
    ev = model.evaluate(u);
    emit();
    for (std::size_t mk = 1; mk < marks.size(); ++mk) {
      const double sa = marks[mk - 1], sb = marks[mk];
      const int pieces =
          std::max(1, static_cast<int>(std::ceil((sb - sa) / cfg.segment_length -
                                                 1e-9)));
      for (int pc = 0; pc < pieces; ++pc) {
        const double pa = sa + (sb - sa) * pc / pieces;
        const double pb = pc + 1 == pieces ? sb : sa + (sb - sa) * (pc + 1) / pieces;
        const double L = pb - pa;
        const double ds_allowed =
            cfg.cfl * ev.cfl_limit / (1.05 * std::exp(0.25 * L));
        long m = static_cast<long>(std::ceil(L / ds_allowed));
        const long mult = std::max(1, cfg.step_multiple);
        m = ((m + mult - 1) / mult) * mult;
        const SystemState start = u;
        const StageEval start_ev = ev;
        for (int attempt = 0;; ++attempt) {
          try {
            const double ds = L / m;
            for (long k = 1; k <= m; ++k) {
              StageEval next;
              u = step(model, u, ev, ds, next);
              u.s = k == m ? pb : pa + k * ds;
              ev = std::move(next);
              ++res.steps;
              const double drift = constraint_drift(d.fit.jet(u.base.W));
              res.max_drift = std::max(res.max_drift, drift);
              if (cfg.enforce_drift && drift > cfg.drift_tol) {
                std::ostringstream os;
                os << "constraint drift " << drift << " exceeds "
                   << cfg.drift_tol;
                throw SolverError(os.str(), u.s);
              }
            }
            break;
          } catch (const SolverError &e) {
            const bool cfl = std::string(e.what()).rfind("CFL", 0) == 0;
            if (!cfl || attempt >= 4)
              throw;
            u = start;
            ev = start_ev;
            m *= 2;
          }
        }
      }
      emit();
    }
  } catch (const SolverError &e) {
    if (e.last())
      throw;
    throw SolverError(e.what(), e.s(), last);
  }
  res.final_state = std::move(u);
  return res;
}

} // namespace ushock
