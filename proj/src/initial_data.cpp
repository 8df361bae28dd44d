#include "ushock/initial_data.hpp"

#include <cmath>
// boost 1.74 pchip calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <memory>

#include "ushock/profile.hpp"

namespace ushock {

namespace {

double psi(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double psi_slope(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

} // namespace

double cutoff(double x) {
  const double u = std::abs(x);
  if (u <= 1.0)
    return 1.0;
  if (u >= 2.0)
    return 0.0;
  const double a = psi(2.0 - u), b = psi(u - 1.0);
  return a / (a + b);
}

double cutoff_slope(double x) {
  const double u = std::abs(x);
  if (u <= 1.0 || u >= 2.0)
    return 0.0;
  const double a = psi(2.0 - u), b = psi(u - 1.0);
  const double da = -psi_slope(2.0 - u), db = psi_slope(u - 1.0);
  const double dchi = (da * b - a * db) / ((a + b) * (a + b));
  return x < 0.0 ? -dchi : dchi;
}

std::string to_string(PerturbationKind k) {
  switch (k) {
  case PerturbationKind::Zero:
    return "zero";
  case PerturbationKind::EvenBump:
    return "even_bump";
  case PerturbationKind::OddBump:
    return "odd_bump";
  case PerturbationKind::Mixed:
    return "mixed";
  case PerturbationKind::Samples:
    return "samples";
  }
  return "zero";
}

PerturbationKind perturbation_from_string(const std::string &name) {
  if (name == "zero")
    return PerturbationKind::Zero;
  if (name == "even_bump")
    return PerturbationKind::EvenBump;
  if (name == "odd_bump")
    return PerturbationKind::OddBump;
  if (name == "mixed")
    return PerturbationKind::Mixed;
  if (name == "samples")
    return PerturbationKind::Samples;
  throw ParamError("data.perturbation.kind", "unknown perturbation '" + name + "'");
}

DataSpec default_data_spec(double epsilon) {
  DataSpec spec;
  spec.perturbation.kind = PerturbationKind::Mixed;
  spec.perturbation.even_amplitude = epsilon;
  spec.perturbation.odd_amplitude = epsilon;
  spec.z0_amplitude = std::pow(epsilon, 1.5);
  spec.a0_amplitude = std::pow(epsilon, 1.5);
  return spec;
}

void validate(const DataSpec &spec, const Params &p) {
  const double bound = 2.0 * std::pow(p.bigM, 30) * p.epsilon;
  if (!std::isfinite(spec.alpha) || std::abs(spec.alpha) > bound)
    throw ParamError("data.alpha", "must satisfy |alpha| <= 2 M^30 eps");
  if (!std::isfinite(spec.beta) || std::abs(spec.beta) > bound)
    throw ParamError("data.beta", "must satisfy |beta| <= 2 M^30 eps");
  const auto &pt = spec.perturbation;
  if (pt.kind != PerturbationKind::Samples) {
    if (std::abs(pt.even_amplitude) > p.epsilon * (1.0 + 1e-12))
      throw ParamError("data.perturbation.even_amplitude",
                       "second derivative at 0 must not exceed eps");
    if (std::abs(pt.odd_amplitude) > p.epsilon * (1.0 + 1e-12))
      throw ParamError("data.perturbation.odd_amplitude",
                       "third derivative at 0 must not exceed eps");
  } else if (pt.sample_x.size() < 4 || pt.sample_x.size() != pt.sample_v.size()) {
    throw ParamError("data.perturbation.samples_file",
                     "need at least 4 (x, value) samples");
  }
  const double seed_bound = std::pow(p.epsilon, 1.5) * (1.0 + 1e-12);
  if (std::abs(spec.z0_amplitude) > seed_bound)
    throw ParamError("data.z0_amplitude", "must not exceed eps^{3/2}");
  if (std::abs(spec.a0_amplitude) > seed_bound)
    throw ParamError("data.a0_amplitude", "must not exceed eps^{3/2}");
  if (!(spec.z0_width > 0.0))
    throw ParamError("data.z0_width", "must be > 0");
  if (!(spec.a0_width > 0.0))
    throw ParamError("data.a0_width", "must be > 0");
}

std::function<ValueSlope(double)> perturbation_eval(const Perturbation &pert) {
  double c2 = 0.0, c3 = 0.0;
  switch (pert.kind) {
  case PerturbationKind::Zero:
    return [](double) { return ValueSlope{}; };
  case PerturbationKind::EvenBump:
    c2 = 0.5 * pert.even_amplitude;
    break;
  case PerturbationKind::OddBump:
    c3 = pert.odd_amplitude / 6.0;
    break;
  case PerturbationKind::Mixed:
    c2 = 0.5 * pert.even_amplitude;
    c3 = pert.odd_amplitude / 6.0;
    break;
  case PerturbationKind::Samples: {
    std::vector<double> xs = pert.sample_x, vs = pert.sample_v;
    const double lo = xs.front(), hi = xs.back();
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(xs), std::move(vs));
    return [spline, lo, hi](double x) {
      if (x < lo || x > hi)
        return ValueSlope{};
      return ValueSlope{(*spline)(x), spline->prime(x)};
    };
  }
  }
  return [c2, c3](double x) {
    const double x2 = x * x;
    const double x5 = x2 * x2 * x;
    const double h = std::exp(-x5 * x);
    const double poly = c2 * x2 + c3 * x2 * x;
    const double dpoly = 2.0 * c2 * x + 3.0 * c3 * x2;
    return ValueSlope{poly * h, (dpoly - 6.0 * x5 * poly) * h};
  };
}

std::function<ValueSlope(double)> initial_W_eval(const DataSpec &spec,
                                                 const Params &p) {
  const auto pert = perturbation_eval(spec.perturbation);
  const double e4 = std::pow(p.epsilon, 0.25);
  const bool cut = spec.cutoff_profile;
  const double alpha = spec.alpha, beta = spec.beta;
  return [=](double x) {
    const BurgersProfile prof;
    const auto t = profile_taylor<double>(prof, x, 1);
    ValueSlope r;
    if (cut) {
      const double chi = cutoff(e4 * x);
      r.v = t[0] * chi;
      r.d = t[1] * chi + t[0] * e4 * cutoff_slope(e4 * x);
    } else {
      r.v = t[0];
      r.d = t[1];
    }
    const ValueSlope hw = pert(x);
    const double chi = cutoff(x), dchi = cutoff_slope(x);
    const double x2 = x * x;
    r.v += hw.v + alpha * x2 * chi + beta * x2 * x * chi;
    r.d += hw.d + alpha * (2.0 * x * chi + x2 * dchi) +
           beta * (3.0 * x2 * chi + x2 * x * dchi);
    return r;
  };
}

SystemState build_initial(const DataSpec &spec, const Params &p,
                          const Grid &grid, bool with_sensitivities) {
  validate(spec, p);
  const int n = grid.n_nodes;
  const auto w0 = initial_W_eval(spec, p);
  SystemState u;
  u.s = -std::log(p.epsilon);
  u.base.W.resize(n);
  u.base.Z.resize(n);
  u.base.A.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = grid.x(j);
    u.base.W(j) = w0(x).v;
    const double zx = x / spec.z0_width, ax = x / spec.a0_width;
    u.base.Z(j) = spec.z0_amplitude * std::exp(-zx * zx);
    u.base.A(j) = spec.a0_amplitude * std::exp(-ax * ax);
  }
  // exact zero at the centre node and exact odd symmetry of the profile part
  u.base.W(grid.mid()) = w0(0.0).v;
  u.base.tau = 0.0;
  u.base.xi = 0.0;
  u.base.kappa = p.kappa0;
  if (with_sensitivities) {
    for (int k = 0; k < 2; ++k) {
      Branch b;
      b.W.resize(n);
      b.Z = Eigen::ArrayXd::Zero(n);
      b.A = Eigen::ArrayXd::Zero(n);
      for (int j = 0; j < n; ++j) {
        const double x = grid.x(j);
        b.W(j) = (k == 0 ? x * x : x * x * x) * cutoff(x);
      }
      u.sens.push_back(std::move(b));
    }
  }
  return u;
}

std::pair<double, double> initialize_newton_seed(const DataSpec &spec,
                                                 const Params &p,
                                                 const Discretization &d) {
  (void)p;
  const auto &pt = spec.perturbation;
  switch (pt.kind) {
  case PerturbationKind::Zero:
    return {0.0, 0.0};
  case PerturbationKind::EvenBump:
    return {-0.5 * pt.even_amplitude, 0.0};
  case PerturbationKind::OddBump:
    return {0.0, -pt.odd_amplitude / 6.0};
  case PerturbationKind::Mixed:
    return {-0.5 * pt.even_amplitude, -pt.odd_amplitude / 6.0};
  case PerturbationKind::Samples:
    break;
  }
  const auto hw = perturbation_eval(pt);
  Eigen::ArrayXd f(d.grid.n_nodes);
  for (int j = 0; j < d.grid.n_nodes; ++j)
    f(j) = hw(d.grid.x(j)).v;
  return {-0.5 * d.fit.derivative(f, 2), -d.fit.derivative(f, 3) / 6.0};
}

ModulationState initial_modulation(const Model &model, const SystemState &u) {
  const StageEval ev = model.evaluate(u);
  return make_snapshot(model, u, ev, false).mod;
}

} // namespace ushock
