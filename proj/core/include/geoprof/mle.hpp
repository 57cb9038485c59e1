#pragma once

// Maximum likelihood fits of (omega, lambda) with beta and sigma profiled
// out, and Wald intervals from the observed information.

#include "geoprof/likelihood.hpp"
#include "geoprof/model.hpp"
#include "geoprof/optimizer.hpp"
#include "geoprof/parameters.hpp"
#include "geoprof/reparam.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoprof {

/// Box for the optimization coordinates (gamma1, log kappa, nu, gamma2, gamma3, lambda).
struct FitBounds {
  double gamma1Lo = -10.0;
  double gamma1Hi = 10.0;
  double kappaLo = 0.05;
  double kappaHi = 100.0;
  double nuLo = 0.0;
  double nuHi = 10.0;
  double anisoLo = -20.0;
  double anisoHi = 20.0;
  double lambdaLo = -2.0;
  double lambdaHi = 2.0;

  /// gamma1 in [log(dmin^2), log((10 dmax)^2)] from inter-point distances.
  static FitBounds fromData(const Dataset& d);
};

struct FitOptions {
  LikMode mode = LikMode::ML;
  std::optional<double> fixKappa;
  std::optional<double> fixLambda;    // forced to 1 when some response is <= 0
  std::optional<NaturalParams> init;  // replaces the default starts
  std::optional<FitBounds> bounds;    // default: FitBounds::fromData
  std::optional<KappaRegime> regime;  // default: chosen from kappa-hat
  int starts = 3;
  bool computeWald = true;
  OptimizerOptions optimizer{};
  EvaluateOptions evaluate{};
};

enum class Convergence { converged, maxIter, boundary };
const char* toString(Convergence c);

/// Coordinates of the full observed information: beta (p), log sigma,
/// gamma1, [log kappa], nu, gamma2, gamma3, [lambda].
struct WaldInfo {
  std::vector<std::string> coordinates;
  Eigen::VectorXd estimate;
  Eigen::MatrixXd covariance;  // inverse information on its positive eigenspace
  std::vector<bool> defined;   // false for coordinates touched by a non-positive eigenvalue
  Eigen::MatrixXd betaCovariance;  // plug-in sigma^2 (X^T V^-1 X)^-1
};

struct StartRecord {
  NaturalParams start;
  double lambdaStart = 1.0;
  double logLik = 0.0;
  int iterations = 0;
  int factorizations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> trace;
};

struct FitResult {
  LikMode mode = LikMode::ML;
  KappaRegime regime = KappaRegime::log;
  std::optional<double> fixedKappa;
  bool lambdaFixed = false;
  InternalParams mleInternal;
  NaturalParams mleNatural;
  double lambdaHat = 1.0;
  Eigen::VectorXd betaHat;
  double sigmaHat = 0.0;  // standard deviation
  double logLikAtMax = 0.0;
  Convergence convergence = Convergence::converged;
  int iterations = 0;
  int factorizations = 0;  // covariance matrices factorized across all starts
  FitBounds bounds;
  std::vector<StartRecord> starts;
  std::optional<WaldInfo> wald;
  std::vector<std::string> covariateNames;
};

/// Raised when no start yields a finite likelihood; carries the best iterate seen.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& msg, std::optional<FitResult> partial)
      : std::runtime_error(msg), partial_(std::move(partial)) {}
  [[nodiscard]] const std::optional<FitResult>& partial() const { return partial_; }

 private:
  std::optional<FitResult> partial_;
};

FitResult fitMLE(const Dataset& d, const FitOptions& opts = {});

/// Moment-based starting values: OLS residual variogram for the range,
/// the first-bin semivariance for the nugget, kappa = 1 and mild anisotropy.
NaturalParams momentStart(const Dataset& d, double lambda = 1.0);

/// Observed information of the full likelihood at a fit, by finite differences.
WaldInfo computeWaldInfo(const Dataset& d, const FitResult& fit);

struct WaldInterval {
  ParamRef param;
  double estimate = 0.0;
  std::optional<double> lo;
  std::optional<double> hi;
};

/// est +- z_{(1+level)/2} se, with se from the delta method on the inverse
/// information (beta uses the plug-in covariance). Undefined when the
/// information is singular in a direction the parameter depends on, or the
/// parameter was held fixed.
std::vector<WaldInterval> waldIntervals(const FitResult& fit, std::span<const ParamRef> params,
                                        double level);

/// Value of any reported parameter at the fit.
double fittedValue(const FitResult& fit, const ParamRef& p);

nlohmann::json toJson(const FitResult& fit);
nlohmann::json toJson(const NaturalParams& p);

}  // namespace geoprof
