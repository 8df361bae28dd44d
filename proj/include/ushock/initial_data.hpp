#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ushock/dynamics.hpp"
#include "ushock/grid.hpp"
#include "ushock/params.hpp"

namespace ushock {

/// Smooth cutoff: 1 on |x| <= 1, 0 on |x| >= 2.
double cutoff(double x);
double cutoff_slope(double x);

enum class PerturbationKind { Zero, EvenBump, OddBump, Mixed, Samples };

std::string to_string(PerturbationKind k);
PerturbationKind perturbation_from_string(const std::string &name);

/**
 * @brief The perturbation added to the cut-off profile.
 *
 * Catalogue members are a2/2 x^2 e^{-x^6} (even) and a3/6 x^3 e^{-x^6} (odd),
 * so that their second and third derivatives at 0 are a2 and a3 and the
 * derivatives of order 0, 1, 4, 5, 6 vanish. Samples are interpolated
 * (monotone cubic) and set to 0 outside the sampled range.
 */
struct Perturbation {
  PerturbationKind kind = PerturbationKind::Zero;
  double even_amplitude = 0.0;
  double odd_amplitude = 0.0;
  std::string samples_file;
  std::vector<double> sample_x, sample_v;
};

struct DataSpec {
  double alpha = 0.0;
  double beta = 0.0;
  Perturbation perturbation;
  double z0_amplitude = 0.0;
  double a0_amplitude = 0.0;
  double z0_width = 1.0;
  double a0_width = 1.0;
  /// multiply the profile by chi(eps^{1/4} x); off gives the bare profile
  bool cutoff_profile = true;
};

/// Default spec at scale eps: mixed bump of size eps, Z0 = A0 = eps^{3/2} e^{-x^2}.
DataSpec default_data_spec(double epsilon);

void validate(const DataSpec &spec, const Params &p);

/// Value and slope of a scalar function.
struct ValueSlope {
  double v = 0.0;
  double d = 0.0;
};

/// Evaluator for the perturbation (value and slope at arbitrary x).
std::function<ValueSlope(double)> perturbation_eval(const Perturbation &pert);

/// W0(x) = W(x) chi(eps^{1/4} x) + hat W0(x) + alpha x^2 chi(x) + beta x^3 chi(x)
std::function<ValueSlope(double)> initial_W_eval(const DataSpec &spec,
                                                 const Params &p);

/// Initial state at s0 = -log eps with tau = xi = 0, kappa = kappa0; the two
/// sensitivity branches (alpha, beta) are attached when requested.
SystemState build_initial(const DataSpec &spec, const Params &p,
                          const Grid &grid, bool with_sensitivities);

/// (alpha0, beta0) cancelling the perturbation's q2 and q3 at s0 on this grid.
std::pair<double, double> initialize_newton_seed(const DataSpec &spec,
                                                 const Params &p,
                                                 const Discretization &d);

/// Modulation state implied by the closure at the given state.
ModulationState initial_modulation(const Model &model, const SystemState &u);

} // namespace ushock
