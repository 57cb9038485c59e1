#include "geoprof/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace geoprof {
namespace {

struct NamedParam {
  Param kind;
  const char* name;
  const char* notation;
};

constexpr NamedParam kNamed[] = {
    {Param::sdSpatial, "sdSpatial", "sigma"},
    {Param::range, "range", "phi_X"},
    {Param::combinedRange, "combinedRange", "sqrt(phi_X*phi_Y)"},
    {Param::anisoRatio, "anisoRatio", "phi_R"},
    {Param::shape, "shape", "kappa"},
    {Param::nugget, "nugget", "nu^2"},
    {Param::sdNugget, "sdNugget", "tau"},
    {Param::anisoAngle, "anisoAngleRadians", "phi_A"},
    {Param::aniso1, "aniso1", "gamma_2"},
    {Param::aniso2, "aniso2", "gamma_3"},
    {Param::boxcox, "boxcox", "lambda"},
    {Param::gamma1, "gamma1", "gamma_1"},
    {Param::kappaTilde, "kappaTilde", "kappa~"},
    {Param::nuInternal, "nu", "nu"},
};

}  // namespace

std::string paramName(const ParamRef& p, const std::vector<std::string>& covariateNames) {
  if (p.kind == Param::beta) {
    if (p.index >= 0 && p.index < static_cast<int>(covariateNames.size()))
      return covariateNames[static_cast<std::size_t>(p.index)];
    return "beta" + std::to_string(p.index);
  }
  for (const auto& np : kNamed)
    if (np.kind == p.kind) return np.name;
  return "unknown";
}

std::string paramNotation(const ParamRef& p) {
  if (p.kind == Param::beta) return "beta_" + std::to_string(p.index);
  for (const auto& np : kNamed)
    if (np.kind == p.kind) return np.notation;
  return "?";
}

std::optional<ParamRef> parseParam(const std::string& name,
                                   const std::vector<std::string>& covariateNames) {
  for (std::size_t i = 0; i < covariateNames.size(); ++i)
    if (covariateNames[i] == name) return ParamRef{Param::beta, static_cast<int>(i)};
  for (const auto& np : kNamed)
    if (name == np.name) return ParamRef{np.kind, 0};
  if (name == "gamma2") return ParamRef{Param::aniso1, 0};
  if (name == "gamma3") return ParamRef{Param::aniso2, 0};
  if (name == "lambda") return ParamRef{Param::boxcox, 0};
  if (name == "sigma") return ParamRef{Param::sdSpatial, 0};
  if (name.rfind("beta", 0) == 0 && name.size() > 4) {
    try {
      std::size_t used = 0;
      const int idx = std::stoi(name.substr(4), &used);
      if (used == name.size() - 4 && idx >= 0 && idx < static_cast<int>(covariateNames.size()))
        return ParamRef{Param::beta, idx};
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::vector<std::string> validParamNames(const std::vector<std::string>& covariateNames) {
  std::vector<std::string> out = covariateNames;
  for (std::size_t i = 0; i < covariateNames.size(); ++i) out.push_back("beta" + std::to_string(i));
  for (const auto& np : kNamed) out.emplace_back(np.name);
  for (const char* alias : {"gamma2", "gamma3", "lambda", "sigma"}) out.emplace_back(alias);
  return out;
}

std::vector<ParamRef> tableParams(int p) {
  std::vector<ParamRef> out;
  for (int i = 0; i < p; ++i) out.push_back({Param::beta, i});
  for (Param k : {Param::sdSpatial, Param::range, Param::combinedRange, Param::anisoRatio,
                  Param::shape, Param::nugget, Param::sdNugget, Param::anisoAngle, Param::aniso1,
                  Param::aniso2, Param::boxcox})
    out.push_back({k, 0});
  return out;
}

bool isCorrelationParam(const ParamRef& p) {
  switch (p.kind) {
    case Param::beta:
    case Param::sdSpatial:
    case Param::sdNugget:
    case Param::boxcox:
      return false;
    default:
      return true;
  }
}

double correlationValue(const ParamRef& p, const NaturalParams& omega, KappaRegime regime) {
  switch (p.kind) {
    case Param::range: return omega.phiX();
    case Param::combinedRange: return omega.combinedRange();
    case Param::anisoRatio: return omega.ratio();
    case Param::shape: return omega.kappa();
    case Param::nugget: return omega.nuggetSq();
    case Param::anisoAngle: return omega.phiA();
    case Param::aniso1: return toInternal(omega, regime).gamma2;
    case Param::aniso2: return toInternal(omega, regime).gamma3;
    case Param::gamma1: return toInternal(omega, regime).gamma1;
    case Param::kappaTilde: return toInternal(omega, regime).kappaTilde;
    case Param::nuInternal: return std::sqrt(omega.nuggetSq());
    default: break;
  }
  throw std::invalid_argument("parameter is not a function of the correlation parameters");
}

std::optional<double> physicalLowerBound(const ParamRef& p) {
  switch (p.kind) {
    case Param::nugget:
    case Param::sdNugget:
    case Param::nuInternal:
      return 0.0;
    case Param::anisoRatio:
      return 1.0;
    default:
      return std::nullopt;
  }
}

}  // namespace geoprof
