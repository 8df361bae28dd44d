#include "ushock/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ushock {

namespace {

double sup_weighted(const Eigen::ArrayXd &f, const Eigen::ArrayXd &weight) {
  return (f.abs() * weight).maxCoeff();
}

Eigen::ArrayXd profile_on_grid(const Grid &g, double sigma = 1.0) {
  const BurgersProfile bp;
  Eigen::ArrayXd out(g.n_nodes);
  for (int j = 0; j < g.n_nodes; ++j)
    out(j) = profile_eval<double>(bp, sigma * g.x(j)) / sigma;
  return out;
}

struct Check {
  Check(std::string n, std::string a, bool lo = false)
      : name(std::move(n)), anchor(std::move(a)), lower(lo) {}
  std::string name, anchor;
  bool lower = false;
  BootstrapEntry worst;
  double worst_slack = HUGE_VAL;
  bool seen = false;

  void add(double s, double value, double bound) {
    const double margin = lower ? value - bound : bound - value;
    const double slack = margin / std::max(std::abs(bound), 1e-300);
    if (!seen || slack < worst_slack || !std::isfinite(value)) {
      worst.s = s;
      worst.value = value;
      worst.bound = bound;
      worst.margin = margin;
      worst.pass = std::isfinite(value) && margin >= 0.0;
      worst_slack = std::isfinite(value) ? slack : -HUGE_VAL;
      seen = true;
    }
  }
};

} // namespace

bool BootstrapReport::passed() const {
  for (const auto &e : entries)
    if (e.hard && !e.pass)
      return false;
  return true;
}

std::vector<std::string> BootstrapReport::hard_failures() const {
  std::vector<std::string> out;
  for (const auto &e : entries)
    if (e.hard && !e.pass)
      out.push_back(e.name);
  return out;
}

const BootstrapEntry *BootstrapReport::find(const std::string &name) const {
  for (const auto &e : entries)
    if (e.name == name)
      return &e;
  return nullptr;
}

std::vector<std::string> default_hard_checks() {
  return {"W_growth", "W1_sharp", "q5_nondegenerate", "kappa_window"};
}

std::vector<std::string> all_bootstrap_checks() {
  return {"W_growth",     "W1_uniform",   "Wn_weighted",  "W1_sharp",
          "Z_sup",        "Zn_decay",     "A_sup",        "An_decay",
          "Wtilde_local", "Wtilde1_local", "q2_decay",    "q3_decay",
          "q5_nondegenerate", "mu_decay", "tau_dot_decay", "kappa_dot_bound",
          "kappa_window", "xi_dot_bound"};
}

BootstrapReport check_bootstraps(const std::vector<Snapshot> &snaps,
                                 const Params &p, const Discretization &d,
                                 const BootstrapConstants &c,
                                 const std::vector<std::string> &hard) {
  if (snaps.size() < 2)
    throw std::invalid_argument("check_bootstraps: need at least 2 snapshots");
  const Grid &g = d.grid;
  const double eps = p.epsilon;
  const Eigen::ArrayXd eta_m120 = eta(g.x, -0.05);
  const Eigen::ArrayXd eta_p15 = eta(g.x, 0.2);
  const Eigen::ArrayXd Wbar = profile_on_grid(g);
  const double local_r = std::pow(eps, -0.25);
  Eigen::ArrayXd local(g.n_nodes);
  for (int j = 0; j < g.n_nodes; ++j)
    local(j) = std::abs(g.x(j)) <= local_r ? 1.0 : 0.0;

  std::vector<Check> checks = {
      {"W_growth", "|W| <= C_growth eta_{1/20}"},
      {"W1_uniform", "|W'| <= C_slope eta_{-1/5}"},
      {"Wn_weighted", "|W^(n)| <= M^{n^2} eta_{-1/5}, n = 2..6 (value is worst ratio)"},
      {"W1_sharp", "|W'| <= 1 + e^{-3s/4}"},
      {"Z_sup", "||Z||_inf <= eps^{5/4}"},
      {"Zn_decay", "||Z^(n)||_inf <= M^{2n^2} e^{-5s/4}, n = 1..6 (value is worst ratio)"},
      {"A_sup", "||A||_inf <= M eps"},
      {"An_decay", "||A^(n)||_inf <= M^{2n^2} e^{-5s/4}, n = 1..6 (value is worst ratio)"},
      {"Wtilde_local", "|W - Wbar| <= eps^{3/20} eta_{1/20} on |x| <= eps^{-1/4}"},
      {"Wtilde1_local", "|W' - Wbar'| <= eps^{1/20} eta_{-1/5} on |x| <= eps^{-1/4}"},
      {"q2_decay", "|q2| <= eps^{1/10} e^{-3s/4}"},
      {"q3_decay", "|q3| <= C_q3 e^{-s}"},
      {"q5_nondegenerate", "|q5| >= 100", true},
      {"mu_decay", "|mu| <= eps^{1/6} e^{-3s/4}"},
      {"tau_dot_decay", "|tau_dot| <= eps^{1/6} e^{-3s/4}"},
      {"kappa_dot_bound", "|kappa_dot| <= eps^{1/8}"},
      {"kappa_window", "|kappa - kappa0| <= eps"},
      {"xi_dot_bound", "|xi_dot| <= 3 kappa0"},
  };
  auto get = [&](const char *name) -> Check & {
    for (auto &ch : checks)
      if (ch.name == name)
        return ch;
    throw std::logic_error("unknown check");
  };

  for (const Snapshot &sn : snaps) {
    const double s = sn.fields.s;
    const Eigen::ArrayXd &W = sn.fields.W;
    const Eigen::ArrayXd &Z = sn.fields.Z;
    const Eigen::ArrayXd &A = sn.fields.A;
    const Eigen::ArrayXd W1 = d.derivative.apply(W, 1);
    get("W_growth").add(s, sup_weighted(W, eta_m120), c.growth);
    get("W1_uniform").add(s, sup_weighted(W1, eta_p15), c.slope);
    double ratio = 0.0;
    for (int n = 2; n <= 6; ++n)
      ratio = std::max(ratio, sup_weighted(d.derivative.apply(W, n), eta_p15) /
                                  std::pow(c.base, n * n));
    get("Wn_weighted").add(s, ratio, 1.0);
    get("W1_sharp").add(s, W1.abs().maxCoeff(), 1.0 + std::exp(-0.75 * s));
    get("Z_sup").add(s, Z.abs().maxCoeff(), std::pow(eps, 1.25));
    get("A_sup").add(s, A.abs().maxCoeff(), p.bigM * eps);
    double rz = 0.0, ra = 0.0;
    for (int n = 1; n <= 6; ++n) {
      const double bound = std::pow(c.base, 2 * n * n) * std::exp(-1.25 * s);
      rz = std::max(rz, d.derivative.apply(Z, n).abs().maxCoeff() / bound);
      ra = std::max(ra, d.derivative.apply(A, n).abs().maxCoeff() / bound);
    }
    get("Zn_decay").add(s, rz, 1.0);
    get("An_decay").add(s, ra, 1.0);
    const Eigen::ArrayXd Wt = W - Wbar;
    get("Wtilde_local").add(s, sup_weighted(Wt, eta_m120 * local),
                            std::pow(eps, 0.15));
    get("Wtilde1_local")
        .add(s, sup_weighted(d.derivative.apply(Wt, 1), eta_p15 * local),
             std::pow(eps, 0.05));
    get("q2_decay").add(s, std::abs(sn.q[2]),
                        std::pow(eps, 0.1) * std::exp(-0.75 * s));
    get("q3_decay").add(s, std::abs(sn.q[3]), c.q3_constant * std::exp(-s));
    get("q5_nondegenerate").add(s, std::abs(sn.q[5]), c.q5_floor);
    const double e16 = std::pow(eps, 1.0 / 6.0) * std::exp(-0.75 * s);
    get("mu_decay").add(s, std::abs(sn.mod.mu), e16);
    get("tau_dot_decay").add(s, std::abs(sn.mod.tau_dot), e16);
    get("kappa_dot_bound").add(s, std::abs(sn.mod.kappa_dot), std::pow(eps, 0.125));
    get("kappa_window").add(s, std::abs(sn.mod.kappa - p.kappa0), eps);
    get("xi_dot_bound").add(s, std::abs(sn.mod.xi_dot), c.xi_dot_factor * p.kappa0);
  }

  BootstrapReport rep;
  for (auto &ch : checks) {
    ch.worst.name = ch.name;
    ch.worst.anchor = ch.anchor;
    ch.worst.hard = std::find(hard.begin(), hard.end(), ch.name) != hard.end();
    rep.entries.push_back(ch.worst);
  }
  return rep;
}

NuEstimate nu_estimate(const std::vector<Snapshot> &snaps, double settle_tol) {
  if (snaps.empty())
    throw std::invalid_argument("nu_estimate: empty series");
  NuEstimate est;
  const std::size_t n = snaps.size();
  est.nu = snaps.back().q[5];
  est.extrapolated = est.nu;
  est.error_estimate = std::numeric_limits<double>::quiet_NaN();
  if (n < 3)
    return est;
  const double a = snaps[n - 3].q[5], b = snaps[n - 2].q[5], c = snaps[n - 1].q[5];
  const double d1 = b - a, d2 = c - b;
  const double ds = snaps[n - 1].fields.s - snaps[n - 2].fields.s;
  est.drift_per_unit = ds > 0.0 ? std::abs(d2) / ds : HUGE_VAL;
  const double r = d1 != 0.0 ? d2 / d1 : 0.0;
  if (std::abs(r) < 1.0 && r >= 0.0) {
    est.extrapolated = c + d2 * r / (1.0 - r);
    est.error_estimate = std::abs(est.extrapolated - c);
  } else {
    est.error_estimate = std::abs(d2);
  }
  est.settled = est.drift_per_unit <= settle_tol;
  return est;
}

double profile_distance(const FieldState &f, const Discretization &d, double nu,
                        double delta) {
  if (!(nu > 0.0))
    throw std::invalid_argument("profile_distance: nu must be > 0");
  const Grid &g = d.grid;
  const double sigma = std::pow(nu / 120.0, 0.25);
  const Eigen::ArrayXd diff = f.W - profile_on_grid(g, sigma);
  double dist = sup_weighted(diff, eta(g.x, -0.05 - delta));
  const Eigen::ArrayXd w1 = eta(g.x, 0.2 - delta);
  for (int n = 1; n <= 5; ++n)
    dist = std::max(dist, sup_weighted(d.derivative.apply(diff, n), w1));
  return dist;
}

double profile_deviation(const FieldState &f, const Discretization &d, double nu) {
  if (!(nu > 0.0))
    throw std::invalid_argument("profile_deviation: nu must be > 0");
  const Grid &g = d.grid;
  const Eigen::ArrayXd diff = f.W - profile_on_grid(g, std::pow(nu / 120.0, 0.25));
  return std::max(diff.abs().maxCoeff(),
                  sup_weighted(d.derivative.apply(diff, 1), eta(g.x, 0.2)));
}

double interpolate_cubic(const Grid &g, const Eigen::ArrayXd &f, double x) {
  const int n = g.n_nodes;
  if (!(x >= g.x(0) && x <= g.x(n - 1)))
    return std::numeric_limits<double>::quiet_NaN();
  const double *begin = g.x.data();
  int j = static_cast<int>(std::upper_bound(begin, begin + n, x) - begin) - 1;
  j = std::clamp(j, 0, n - 2);
  if (g.x(j) == x)
    return f(j);
  const int start = std::clamp(j - 1, 0, n - 4);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    double l = 1.0;
    for (int k = 0; k < 4; ++k)
      if (k != i)
        l *= (x - g.x(start + k)) / (g.x(start + i) - g.x(start + k));
    acc += l * f(start + i);
  }
  return acc;
}

namespace {

void fill_bP(PhysicalSlice &sl, const Params &p) {
  const int n = static_cast<int>(sl.w.size());
  sl.b.resize(n);
  sl.P.resize(n);
  for (int j = 0; j < n; ++j) {
    const double gap = sl.w(j) - sl.z(j);
    if (gap < 0.0) {
      std::ostringstream os;
      os << "complex sound speed: w < z at theta = " << sl.theta(j);
      throw std::domain_error(os.str());
    }
    sl.b(j) = 0.5 * (sl.w(j) + sl.z(j));
    sl.P(j) = std::pow(0.5 * p.lambda * gap, 1.0 / p.lambda);
  }
  sl.has_bP = true;
}

} // namespace

PhysicalSlice reconstruct_physical(const Snapshot &sn, const Params &p,
                                   const Grid &g, const Eigen::ArrayXd &theta,
                                   bool with_bP) {
  const double s = sn.fields.s;
  PhysicalSlice sl;
  sl.t = sn.mod.tau - std::exp(-s);
  sl.theta = theta;
  const int n = static_cast<int>(theta.size());
  sl.w.resize(n);
  sl.z.resize(n);
  sl.a.resize(n);
  const double e54 = std::exp(1.25 * s), em14 = std::exp(-0.25 * s);
  for (int j = 0; j < n; ++j) {
    const double x = (theta(j) - sn.mod.xi) * e54;
    sl.w(j) = em14 * interpolate_cubic(g, sn.fields.W, x) + sn.mod.kappa;
    sl.z(j) = interpolate_cubic(g, sn.fields.Z, x);
    sl.a(j) = interpolate_cubic(g, sn.fields.A, x);
  }
  if (with_bP)
    fill_bP(sl, p);
  return sl;
}

PhysicalSlice reconstruct_physical(const Snapshot &sn, const Params &p,
                                   const Grid &g, bool with_bP) {
  const double s = sn.fields.s;
  PhysicalSlice sl;
  sl.t = sn.mod.tau - std::exp(-s);
  sl.theta = sn.mod.xi + g.x * std::exp(-1.25 * s);
  sl.w = std::exp(-0.25 * s) * sn.fields.W + sn.mod.kappa;
  sl.z = sn.fields.Z;
  sl.a = sn.fields.A;
  if (with_bP)
    fill_bP(sl, p);
  return sl;
}

FieldState self_similar_from(const PhysicalSlice &sl, const Snapshot &sn,
                             const Grid &g) {
  const double s = sn.fields.s;
  FieldState f;
  f.s = s;
  const int n = g.n_nodes;
  f.W.resize(n);
  f.Z.resize(n);
  f.A.resize(n);
  const double e14 = std::exp(0.25 * s), em54 = std::exp(-1.25 * s);
  const double *th = sl.theta.data();
  const int m = static_cast<int>(sl.theta.size());
  for (int j = 0; j < n; ++j) {
    const double theta = sn.mod.xi + g.x(j) * em54;
    const int k = static_cast<int>(std::lower_bound(th, th + m, theta) - th);
    // slices built on the nodes hit exactly; otherwise take the nearest sample
    int best = std::clamp(k, 0, m - 1);
    if (k > 0 && (k == m || std::abs(th[k - 1] - theta) < std::abs(th[best] - theta)))
      best = k - 1;
    f.W(j) = (sl.w(best) - sn.mod.kappa) * e14;
    f.Z(j) = sl.z(best);
    f.A(j) = sl.a(best);
  }
  return f;
}

double slope_at_shock(const Snapshot &sn, const Discretization &d) {
  const double s = sn.fields.s;
  const double t = sn.mod.tau - std::exp(-s);
  // d_theta w = e^{-s/4} e^{5s/4} W'
  const double dtheta_w = std::exp(s) * d.fit.derivative(sn.fields.W, 1);
  return dtheta_w * (sn.mod.tau - t);
}

double holder_seminorm(const Eigen::ArrayXd &theta, const Eigen::ArrayXd &w,
                       double exponent) {
  const int n = static_cast<int>(theta.size());
  if (n < 2 || w.size() != theta.size())
    throw std::invalid_argument("holder_seminorm: need >= 2 matching samples");
  auto q = [&](int i, int j) {
    const double dth = std::abs(theta(i) - theta(j));
    return dth > 0.0 ? std::abs(w(i) - w(j)) / std::pow(dth, exponent) : 0.0;
  };
  double best = 0.0;
  if (n <= 2000) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        best = std::max(best, q(i, j));
    return best;
  }
  for (int i = 0; i < n; ++i)
    for (int step = 1; i + step < n; step *= 2)
      best = std::max(best, q(i, i + step));
  std::vector<int> anchors;
  const int m = 1500;
  for (int k = 0; k < m; ++k)
    anchors.push_back(static_cast<int>((static_cast<long>(k) * (n - 1)) / (m - 1)));
  Eigen::Index imax, imin;
  w.maxCoeff(&imax);
  w.minCoeff(&imin);
  anchors.push_back(static_cast<int>(imax));
  anchors.push_back(static_cast<int>(imin));
  for (std::size_t a = 0; a < anchors.size(); ++a)
    for (std::size_t b = a + 1; b < anchors.size(); ++b)
      best = std::max(best, q(anchors[a], anchors[b]));
  return best;
}

Trajectory trajectory(const std::function<double(double, double)> &speed,
                      double x0, double s0, double s1, double x_limit,
                      int steps_per_unit) {
  Trajectory tr;
  const int m = std::max(1, static_cast<int>(std::ceil((s1 - s0) * steps_per_unit)));
  const double h = (s1 - s0) / m;
  double x = x0, s = s0;
  tr.s.push_back(s);
  tr.x.push_back(x);
  for (int k = 0; k < m; ++k) {
    const double k1 = speed(x, s);
    const double k2 = speed(x + 0.5 * h * k1, s + 0.5 * h);
    const double k3 = speed(x + 0.5 * h * k2, s + 0.5 * h);
    const double k4 = speed(x + h * k3, s + h);
    const double xn = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(xn) || std::abs(xn) > x_limit) {
      tr.truncated = true;
      break;
    }
    x = xn;
    s = s0 + (k + 1) * h;
    tr.s.push_back(s);
    tr.x.push_back(x);
  }
  return tr;
}

Trajectory trajectory(const std::vector<Snapshot> &snaps, const Params &p,
                      const Grid &g, double x0, double s0, double s1,
                      int steps_per_unit) {
  if (snaps.size() < 2 || s0 < snaps.front().fields.s - 1e-12 ||
      s1 > snaps.back().fields.s + 1e-12)
    throw std::invalid_argument("trajectory: snapshots do not cover [s0, s1]");
  std::vector<Eigen::ArrayXd> speeds;
  for (const Snapshot &sn : snaps)
    speeds.push_back(compute_speeds(sn.fields, sn.mod, p, g).V_W);
  auto V = [&](double x, double s) {
    std::size_t k = 0;
    while (k + 2 < snaps.size() && snaps[k + 1].fields.s <= s)
      ++k;
    const double sa = snaps[k].fields.s, sb = snaps[k + 1].fields.s;
    const double th = std::clamp((s - sa) / (sb - sa), 0.0, 1.0);
    return (1.0 - th) * interpolate_cubic(g, speeds[k], x) +
           th * interpolate_cubic(g, speeds[k + 1], x);
  };
  return trajectory(V, x0, s0, s1, g.x_max(), steps_per_unit);
}

double XNormComponents::total() const {
  return w_growth + w_derivs + q2_scaled + q3_scaled + z_sup + a_sup + z_derivs +
         a_derivs;
}

XNorm x_norm(const std::vector<Snapshot> &snaps, const Params &p,
             const Discretization &d) {
  const Grid &g = d.grid;
  const Eigen::ArrayXd eta_m120 = eta(g.x, -0.05);
  const Eigen::ArrayXd eta_p15 = eta(g.x, 0.2);
  const double eps = p.epsilon;
  XNorm out;
  double running = 0.0;
  for (const Snapshot &sn : snaps) {
    const double s = sn.fields.s;
    XNormComponents c;
    c.s = s;
    c.w_growth = sup_weighted(sn.fields.W, eta_m120);
    for (int j = 1; j <= 6; ++j) {
      c.w_derivs += sup_weighted(d.derivative.apply(sn.fields.W, j), eta_p15);
      c.z_derivs += std::exp(1.25 * s) * d.derivative.apply(sn.fields.Z, j).abs().maxCoeff();
      c.a_derivs += std::exp(1.25 * s) * d.derivative.apply(sn.fields.A, j).abs().maxCoeff();
    }
    c.q2_scaled = std::exp(0.75 * s) * std::abs(sn.q[2]);
    c.q3_scaled = std::exp(0.75 * s) * std::abs(sn.q[3]);
    c.z_sup = std::pow(eps, -1.25) * sn.fields.Z.abs().maxCoeff();
    c.a_sup = std::pow(eps, -0.75) * sn.fields.A.abs().maxCoeff();
    running = std::max(running, c.total());
    out.instantaneous.push_back(c);
    out.cumulative.push_back(running);
  }
  return out;
}

} // namespace ushock
