#pragma once

// Names and value maps for every reported model parameter.

#include "geoprof/model.hpp"
#include "geoprof/reparam.hpp"

#include <optional>
#include <string>
#include <vector>

namespace geoprof {

enum class Param {
  beta,
  sdSpatial,      // sigma
  range,          // phiX
  combinedRange,  // sqrt(phiX phiY)
  anisoRatio,     // phiR = phiX / phiY
  shape,          // kappa
  nugget,         // nu^2
  sdNugget,       // tau = sigma nu
  anisoAngle,     // phiA
  aniso1,         // gamma2
  aniso2,         // gamma3
  boxcox,         // lambda
  // internal coordinates, accepted for 2-D surfaces
  gamma1,
  kappaTilde,
  nuInternal,
};

struct ParamRef {
  Param kind = Param::beta;
  int index = 0;  // covariate column for beta

  friend bool operator==(const ParamRef&, const ParamRef&) = default;
};

std::string paramName(const ParamRef& p, const std::vector<std::string>& covariateNames);
std::string paramNotation(const ParamRef& p);

/// Accepts the reported names ("range", "shape", ..., covariate names,
/// "beta0".."beta(p-1)", beta0 being the intercept) and the internal coordinate names
/// ("gamma1", "kappaTilde", "nu", "gamma2", "gamma3", "lambda").
std::optional<ParamRef> parseParam(const std::string& name,
                                   const std::vector<std::string>& covariateNames);

std::vector<std::string> validParamNames(const std::vector<std::string>& covariateNames);

/// Rows of the CI table: every beta, then sigma, range, combinedRange,
/// anisoRatio, shape, nugget, sdNugget, angle, gamma2, gamma3, lambda.
std::vector<ParamRef> tableParams(int p);

/// True for parameters that are functions of the correlation parameters only.
bool isCorrelationParam(const ParamRef& p);

/// Value of a correlation-only parameter (including internal coordinates
/// under the given regime).
double correlationValue(const ParamRef& p, const NaturalParams& omega,
                        KappaRegime regime = KappaRegime::log);

/// Lower physical bound when one exists (nugget and sdNugget at 0, anisoRatio at 1).
std::optional<double> physicalLowerBound(const ParamRef& p);

}  // namespace geoprof
