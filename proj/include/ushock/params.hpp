#pragma once

#include <stdexcept>
#include <string>

namespace ushock {

/// Thrown when a constructor argument lies outside its admissible range.
class ParamError : public std::invalid_argument {
public:
  ParamError(std::string field, const std::string &what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Adiabatic and asymptotic constants of the azimuthal Euler system.
struct Params {
  double gamma = 1.4;
  double lambda = 0.2;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;
  double beta5 = 0.0;
  double epsilon = 1e-2;
  double kappa0 = 1.0;
  double bigM = 4.0;
  double ell = 0.1;
};

Params make_params(double gamma, double epsilon, double kappa0, double bigM,
                   double ell);

} // namespace ushock
