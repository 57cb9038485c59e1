#include "geoprof/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geoprof {

const char* toString(KappaRegime r) { return r == KappaRegime::log ? "log" : "invSqrt"; }

KappaRegime kappaRegimeFromString(const std::string& s) {
  if (s == "log") return KappaRegime::log;
  if (s == "invSqrt") return KappaRegime::invSqrt;
  throw std::invalid_argument("unknown kappa regime '" + s + "'");
}

KappaRegime chooseKappaRegime(double kappaHat) {
  return kappaHat < 4.0 ? KappaRegime::log : KappaRegime::invSqrt;
}

double kappaToTilde(double kappa, KappaRegime regime) {
  return regime == KappaRegime::log ? std::log(kappa) : 1.0 / std::sqrt(kappa);
}

double tildeToKappa(double kappaTilde, KappaRegime regime) {
  if (regime == KappaRegime::log) return std::exp(kappaTilde);
  if (!(kappaTilde > 0.0)) throw std::domain_error("inverse-root shape coordinate must be > 0");
  return 1.0 / (kappaTilde * kappaTilde);
}

InternalParams toInternal(const NaturalParams& omega, KappaRegime regime) {
  InternalParams out;
  out.gamma1 = std::log(omega.phiX()) + std::log(omega.phiY());
  out.kappaTilde = kappaToTilde(omega.kappa(), regime);
  out.nu = std::sqrt(omega.nuggetSq());
  const double r = std::sqrt(std::max(0.0, omega.ratio() - 1.0));
  out.gamma2 = r * std::cos(2.0 * omega.phiA());
  out.gamma3 = r * std::sin(2.0 * omega.phiA());
  return out;
}

NaturalParams toNatural(const InternalParams& internal, KappaRegime regime, double lambda) {
  const double r2 = internal.gamma2 * internal.gamma2 + internal.gamma3 * internal.gamma3;
  const double ratio = 1.0 + r2;
  const double phiA = r2 > 0.0 ? 0.5 * std::atan2(internal.gamma3, internal.gamma2) : 0.0;
  const double geo = std::exp(0.5 * internal.gamma1);
  const double sr = std::sqrt(ratio);
  return {geo * sr, geo / sr, phiA, tildeToKappa(internal.kappaTilde, regime),
          internal.nu * internal.nu, lambda};
}

}  // namespace geoprof
