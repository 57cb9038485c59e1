#pragma once

// Internal coordinates in which the profile likelihood is close to
// quadratic:
//
//   gamma1     = log phiX + log phiY
//   kappaTilde = log kappa          (regime "log", used when kappa-hat < 4)
//              = kappa^(-1/2)       (regime "invSqrt", kappa-hat >= 4)
//   nu         = sqrt(nuggetSq)
//   gamma2     = sqrt(phiX/phiY - 1) cos(2 phiA)
//   gamma3     = sqrt(phiX/phiY - 1) sin(2 phiA)
//
// Isotropy is the single point gamma2 = gamma3 = 0.

#include "geoprof/model.hpp"

#include <Eigen/Dense>

#include <string>

namespace geoprof {

enum class KappaRegime { log, invSqrt };

const char* toString(KappaRegime r);
KappaRegime kappaRegimeFromString(const std::string& s);

/// Regime for a fitted shape: log below 4, inverse square root otherwise.
KappaRegime chooseKappaRegime(double kappaHat);

double kappaToTilde(double kappa, KappaRegime regime);
double tildeToKappa(double kappaTilde, KappaRegime regime);

struct InternalParams {
  double gamma1 = 0.0;
  double kappaTilde = 0.0;
  double nu = 0.0;  // may be negative before nugget repair
  double gamma2 = 0.0;
  double gamma3 = 0.0;

  /// (gamma1, kappaTilde, nu, gamma2, gamma3)
  [[nodiscard]] Eigen::Matrix<double, 5, 1> asVector() const {
    return {gamma1, kappaTilde, nu, gamma2, gamma3};
  }
  static InternalParams fromVector(const Eigen::Matrix<double, 5, 1>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
};

InternalParams toInternal(const NaturalParams& omega, KappaRegime regime);

/// Inverse map. nu is squared, so a negative internal nu maps to the same
/// nugget as its absolute value; repair such points before use.
NaturalParams toNatural(const InternalParams& internal, KappaRegime regime, double lambda = 1.0);

}  // namespace geoprof
