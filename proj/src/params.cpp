#include "ushock/params.hpp"

#include <cmath>

namespace ushock {

Params make_params(double gamma, double epsilon, double kappa0, double bigM,
                   double ell) {
  if (!std::isfinite(gamma) || !(gamma > 1.0))
    throw ParamError("gamma", "must be finite and > 1");
  if (!std::isfinite(epsilon) || !(epsilon > 0.0))
    throw ParamError("epsilon", "must be > 0");
  if (!std::isfinite(ell) || !(ell < 1.0))
    throw ParamError("ell", "must be < 1");
  if (!(epsilon < ell))
    throw ParamError("epsilon", "must be < ell");
  if (!std::isfinite(bigM) || !(bigM >= 1.0))
    throw ParamError("bigM", "must be >= 1");
  if (!std::isfinite(kappa0) || !(kappa0 > 0.0))
    throw ParamError("kappa0", "must be > 0");

  Params p;
  p.gamma = gamma;
  p.lambda = 0.5 * (gamma - 1.0);
  const double l = p.lambda;
  p.beta1 = 1.0 / (1.0 + l);
  p.beta2 = (1.0 - l) / (1.0 + l);
  p.beta3 = (1.0 - 2.0 * l) / (1.0 + l);
  p.beta4 = (3.0 + 2.0 * l) / (1.0 + l);
  p.beta5 = l / (2.0 + 2.0 * l);
  p.epsilon = epsilon;
  p.kappa0 = kappa0;
  p.bigM = bigM;
  p.ell = ell;
  return p;
}

} // namespace ushock
