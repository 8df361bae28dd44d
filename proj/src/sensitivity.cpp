#include "ushock/sensitivity.hpp"

#include <cmath>
#include <sstream>

namespace ushock {

ModulationSensitivity
solve_modulation_sensitivities(const ModulationInputs &in,
                               const ModulationState &mod,
                               const SensitivityInputs &sin, double q5_floor) {
  const auto &q = in.q;
  const auto &qc = sin.q_c;
  if (!(std::abs(q[5]) >= q5_floor)) {
    std::ostringstream os;
    os << "profile degeneracy: |q5| = " << std::abs(q[5]) << " below floor "
       << q5_floor;
    throw SolverError(os.str(), in.s);
  }
  const double E = std::exp(0.25 * in.s);
  const double bt = mod.beta_tau;
  const double mu = mod.mu;
  const double binom4[5] = {1, 4, 6, 4, 1};
  auto G = [&](int j) { return bt * in.beta2 * E * in.z[j]; };
  auto F = [&](int n) { return bt * in.fw[n]; };
  // d_c G^{(j)} = tau_dot_c bt G^{(j)} + bt beta2 E z_c[j], same shape for F.
  auto Gc0 = [&](int j) { return bt * in.beta2 * E * sin.z_c[j]; };
  auto Fc0 = [&](int n) { return bt * sin.fw_c[n]; };

  // q5 mu_c = P + Q tau_dot_c
  double P = -qc[5] * mu - 10.0 * bt * (qc[2] * q[3] + q[2] * qc[3]) + Fc0(4);
  double Q = -10.0 * bt * bt * q[2] * q[3] + bt * F(4);
  for (int j = 2; j <= 4; ++j) {
    P -= binom4[j] * (G(j) * qc[5 - j] + Gc0(j) * q[5 - j]);
    Q -= binom4[j] * bt * G(j) * q[5 - j];
  }
  // bt (1 + bt tau_dot) tau_dot_c = d_c G' - mu_c q2 - mu q2_c + d_c F'
  const double R = Gc0(1) - mu * qc[2] + Fc0(1);
  const double T = bt * (1.0 + bt * mod.tau_dot) - bt * (G(1) + F(1));

  Eigen::Matrix2d M;
  M << q[5], -Q, q[2], T;
  const Eigen::Vector2d sol = M.fullPivLu().solve(Eigen::Vector2d(P, R));

  ModulationSensitivity out;
  out.mu_c = sol(0);
  out.tau_dot_c = sol(1);
  const double e34 = std::exp(0.75 * in.s);
  const double dF0 = out.tau_dot_c * bt * F(0) + Fc0(0);
  out.kappa_dot_c = (e34 * out.mu_c - mod.kappa_dot * bt * bt * out.tau_dot_c +
                     e34 * dF0) /
                    bt;
  out.xi_dot_c = (out.tau_dot_c * bt * mu + E * sin.kappa_c * bt +
                  bt * in.beta2 * E * sin.z_c[0] - out.mu_c) /
                 (E * bt);
  return out;
}

SensitivityInputs gather_sensitivity_inputs(const SystemState &u, int branch,
                                            const Params &p,
                                            const Discretization &d) {
  const Branch &b = u.base;
  const Branch &c = u.sens.at(branch);
  SensitivityInputs si;
  si.kappa_c = c.kappa;
  si.q_c = d.fit.jet(c.W);
  si.z_c = d.fit.jet(c.Z);
  si.z_c[0] = c.Z(d.grid.mid());
  const double em34 = std::exp(-0.75 * u.s);
  const double emq = std::exp(-0.25 * u.s);
  Eigen::ArrayXd fwc = Eigen::ArrayXd::Zero(d.grid.n_nodes);
  const int f0 = d.fit.first();
  for (int j = f0; j < f0 + ZeroFit::kPoints; ++j) {
    const double X = emq * b.W(j) + b.kappa;
    const double Xc = emq * c.W(j) + c.kappa;
    fwc(j) = -em34 * (c.A(j) * (p.beta3 * b.Z(j) + p.beta4 * X) +
                      b.A(j) * (p.beta3 * c.Z(j) + p.beta4 * Xc));
  }
  si.fw_c = d.fit.jet(fwc);
  return si;
}

std::vector<Branch> sensitivity_rhs(const SystemState &u, const Model &model) {
  return model.evaluate(u).sens_rate;
}

std::vector<ModulationSensitivity>
modulation_sensitivities(const SystemState &u, const Model &model) {
  const StageEval ev = model.evaluate(u);
  const Snapshot sn = make_snapshot(model, u, ev, false);
  std::vector<ModulationSensitivity> out;
  for (const auto &ss : sn.sens)
    out.push_back({ss.mu_c, ss.tau_dot_c, ss.kappa_dot_c, ss.xi_dot_c});
  return out;
}

Eigen::Matrix2d jacobian(const Snapshot &snap) {
  if (snap.sens.size() < 2)
    throw std::invalid_argument("jacobian: snapshot carries no sensitivities");
  Eigen::Matrix2d J;
  J << snap.sens[0].q_c[2], snap.sens[1].q_c[2], snap.sens[0].q_c[3],
      snap.sens[1].q_c[3];
  return J;
}

Eigen::Matrix2d jacobian(const SystemState &u, const Discretization &d) {
  if (u.sens.size() < 2)
    throw std::invalid_argument("jacobian: state carries no sensitivities");
  Eigen::Matrix2d J;
  J << d.fit.derivative(u.sens[0].W, 2), d.fit.derivative(u.sens[1].W, 2),
      d.fit.derivative(u.sens[0].W, 3), d.fit.derivative(u.sens[1].W, 3);
  return J;
}

SensitivityState sensitivity_state(const Snapshot &snap) {
  if (snap.sens.size() < 2)
    throw std::invalid_argument("sensitivity_state: no sensitivities");
  SensitivityState st;
  SensitivityBranch *out[2] = {&st.alpha, &st.beta};
  for (int k = 0; k < 2; ++k) {
    const auto &ss = snap.sens[k];
    SensitivityBranch &b = *out[k];
    if (snap.sens_fields.size() > static_cast<std::size_t>(k)) {
      b.W_c = snap.sens_fields[k].W;
      b.Z_c = snap.sens_fields[k].Z;
      b.A_c = snap.sens_fields[k].A;
    }
    b.mu_c = ss.mu_c;
    b.tau_dot_c = ss.tau_dot_c;
    b.kappa_dot_c = ss.kappa_dot_c;
    b.xi_dot_c = ss.xi_dot_c;
    b.kappa_c = ss.kappa_c;
    b.tau_c = ss.tau_c;
    b.xi_c = ss.xi_c;
    b.q_c = ss.q_c;
  }
  return st;
}

} // namespace ushock
