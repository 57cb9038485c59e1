#pragma once

// Profile likelihood curves and surfaces from a batch-evaluated likelihood
// grid, with likelihood-based confidence intervals.

#include "geoprof/hull.hpp"
#include "geoprof/likelihood.hpp"
#include "geoprof/parameters.hpp"
#include "geoprof/reparam.hpp"

#include <optional>
#include <string>
#include <vector>

namespace geoprof {

enum class Space { natural, internal };
const char* toString(Space s);

enum class CiMethod { likelihood, wald };

/// Interval endpoints. An open side means the curve never fell below the
/// threshold; the value then holds the edge of the explored domain and is
/// printed as "<edge" or ">edge".
struct ConfidenceInterval {
  double level = 0.9;
  CiMethod method = CiMethod::likelihood;
  std::optional<double> lo;
  std::optional<double> hi;
  bool loOpen = false;
  bool hiOpen = false;

  [[nodiscard]] std::string loText(int precision = 6) const;
  [[nodiscard]] std::string hiText(int precision = 6) const;
};

struct ProfileCurve {
  std::string name;
  ParamRef param;
  Space space = Space::natural;
  std::vector<double> abscissa;    // sorted
  std::vector<double> pll;         // log-likelihood minus its maximum
  std::vector<bool> isHullVertex;
  std::vector<double> hullX;       // interpolation support
  std::vector<double> hullY;
  double maxLogLik = 0.0;          // subtracted reference
  std::optional<double> physicalLower;
  ConfidenceInterval ci;

  [[nodiscard]] double at(double x) const { return interpolateLinear(hullX, hullY, x); }
  /// Abscissa of the largest support value.
  [[nodiscard]] double argmax() const;
};

/// Builds a curve from a raw cloud. With hull = true the support is the
/// upper convex hull; otherwise every (deduplicated, highest) point.
/// reference is subtracted from y (defaults to the cloud maximum).
ProfileCurve curveFromCloud(std::string name, const ParamRef& param, Space space,
                            std::span<const double> x, std::span<const double> y, bool hull,
                            std::optional<double> reference = std::nullopt);

/// 1-D profile of a correlation parameter or lambda from the grid. For
/// correlation parameters each set contributes (theta_k, max_m l(k, m)) and
/// the upper hull is interpolated; lambda uses (lambda_m, max_k l(k, m)).
/// Internal space uses the internal coordinate under the given regime.
ProfileCurve profile1D(const LikGrid& grid, const ParamRef& param, KappaRegime regime,
                       Space space = Space::natural,
                       std::optional<double> reference = std::nullopt);

/// {theta : pll(theta) >= -chi2_1(level)/2} by linear inverse interpolation.
ConfidenceInterval likelihoodCI(const ProfileCurve& curve, double level);

/// Per-(k, m) profile over beta_a: the residual form
/// r(b) = c0 - 2 c1 b + c2 b^2 from the stored cross-product blocks,
/// plugged into the sigma-profiled likelihood and maximized over (k, m).
ProfileCurve profileBeta(const LikGrid& grid, int a, std::span<const double> betaGrid,
                         const std::vector<std::string>& covariateNames = {},
                         std::optional<double> reference = std::nullopt);

/// l_p(sigma) = max over (k, m) of the likelihood at fixed sigma.
ProfileCurve profileSigma(const LikGrid& grid, std::span<const double> sigmaGrid,
                          std::optional<double> reference = std::nullopt);

/// l_p(tau), tau = sigma nu: each set with nu_k > 0 contributes sigma = tau / nu_k.
ProfileCurve profileSdNugget(const LikGrid& grid, std::span<const double> tauGrid,
                             std::optional<double> reference = std::nullopt);

/// Log-likelihood of one grid cell at a fixed sigma (standard deviation).
double logLikAtSigma(const LikGrid& grid, std::size_t k, std::size_t m, double sigma);

struct Surface2D {
  ParamRef xParam;
  ParamRef yParam;
  Space space = Space::natural;
  std::vector<double> xs;
  std::vector<double> ys;
  Eigen::MatrixXd values;  // pll at (xs[i], ys[j]); NaN outside the hull footprint
  struct Contour {
    double level;      // confidence level
    double threshold;  // -chi2_2(level)/2
    std::vector<Polyline> lines;
  };
  std::vector<Contour> contours;
};

struct Surface2DOptions {
  int gridSize = 101;
  std::vector<double> levels{0.5, 0.8, 0.9, 0.95};
  Space space = Space::natural;
};

/// Upper-hull surface of (theta_x, theta_y, l). Natural-space parameters
/// that are functions of internal coordinates are hulled in internal space
/// and the natural lattice is mapped there for lookup.
Surface2D profile2D(const LikGrid& grid, const ParamRef& xParam, const ParamRef& yParam,
                    KappaRegime regime, const Surface2DOptions& opts = {},
                    std::optional<double> reference = std::nullopt);

/// Default beta lattice: 201 points over estimate +- 4 se.
std::vector<double> defaultBetaGrid(double estimate, double se, int points = 201);
/// Default sigma lattice: 201 log-spaced points over sigmaHat [1/factor, factor].
std::vector<double> defaultSigmaGrid(double sigmaHat, int points = 201, double factor = 4.0);

}  // namespace geoprof
