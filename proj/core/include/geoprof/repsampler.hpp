#pragma once

// Quadratic approximation of the profile likelihood around an MLE and the
// representative parameter sets placed on its chi-square contour ellipsoids.

#include "geoprof/likelihood.hpp"
#include "geoprof/model.hpp"
#include "geoprof/reparam.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geoprof {

/// Evaluates an objective at many points in one call.
using BatchObjective = std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>;

/// Central-difference stencil: the center, x +- d_i e_i, and x +- d_i e_i +- d_j e_j
/// for i < j (1 + 2q + 2q(q-1) points). Step d_i = step * max(1, |x_i|).
std::vector<Eigen::VectorXd> hessianStencil(const Eigen::VectorXd& center, double step);

/// Symmetrized central-difference Hessian from one batched objective call.
/// A non-finite stencil value shrinks the step 10x once; a second failure
/// throws naming the offending point.
Eigen::MatrixXd numericHessian(const BatchObjective& objective, const Eigen::VectorXd& center,
                               double step = 1e-3);

/// Negative eigenvalues become their absolute values; when the largest
/// exceeds 100 every eigenvalue below 0.1 is raised to 0.1.
Eigen::VectorXd repairEigenvalues(const Eigen::VectorXd& eigVals);

struct QuadApprox {
  InternalParams center;
  KappaRegime regime = KappaRegime::log;
  std::optional<double> fixedKappa;  // set for the 4-dimensional (kappa-fixed) form
  double lambdaHat = 1.0;
  double lambdaCurvature = 0.0;  // d^2 l / d lambda^2 at the MLE
  double logLikAtCenter = 0.0;
  Eigen::MatrixXd negHessian;  // -H in the free internal coordinates
  Eigen::MatrixXd eigVecs;     // E, orthonormal columns
  Eigen::VectorXd rawEigVals;
  Eigen::VectorXd eigVals;     // repaired D

  [[nodiscard]] int dim() const { return fixedKappa ? 4 : 5; }
  /// Free coordinates of an internal point: 5 or 4 (kappaTilde dropped).
  [[nodiscard]] Eigen::VectorXd freeCoords(const InternalParams& p) const;
  [[nodiscard]] InternalParams fromFree(const Eigen::VectorXd& v) const;
};

/// Eigen-decomposes -H and repairs its spectrum.
QuadApprox makeQuadApprox(const InternalParams& center, KappaRegime regime,
                          std::optional<double> fixedKappa, const Eigen::MatrixXd& negHessian);

struct QuadApproxOptions {
  double step = 1e-3;
  bool fixLambda = false;  // evaluate at lambdaHat only
  EvaluateOptions evaluate{};
};

/// Builds the quadratic approximation of l_p at an MLE. Every stencil point
/// is evaluated at lambdaHat and lambdaHat +- step in a single batch; lambda
/// is profiled out of each point by the vertex of the parabola through those
/// three values. The second difference at the center gives lambdaCurvature.
QuadApprox likelihoodQuadApprox(const Dataset& d, const InternalParams& center,
                                KappaRegime regime, std::optional<double> fixedKappa,
                                double lambdaHat, LikMode mode,
                                const QuadApproxOptions& opts = {});

struct SphereOptions {
  int restarts = 3;
  int maxIter = 1500;
  int patience = 100;       // stop when the min distance gains < tolerance over this many iterations
  double tolerance = 1e-4;
};

/// n points on the unit sphere in R^dim, spread by a seeded repulsion
/// optimizer that maximizes the minimum pairwise distance (best of restarts).
std::vector<Eigen::VectorXd> spherePoints(int dim, int n, std::uint64_t seed,
                                          const SphereOptions& opts = {});

double minPairwiseDistance(const std::vector<Eigen::VectorXd>& pts);

struct Provenance {
  enum class Kind { mle, contour, kappaFixed };
  Kind kind = Kind::mle;
  int dim = 5;
  double kappa = 0.0;  // fixed shape for kappaFixed points

  [[nodiscard]] std::string str() const;
  static Provenance parse(const std::string& s);
};

struct RepresentativeSet {
  KappaRegime regime = KappaRegime::log;
  std::vector<InternalParams> points;
  std::vector<NaturalParams> natural;  // mirror of points (lambda = 1)
  std::vector<double> alpha;           // NaN for MLE rows
  std::vector<Provenance> provenance;
  std::vector<double> lambdaGrid;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  void add(const InternalParams& p, double a, const Provenance& prov);
  void append(const RepresentativeSet& other);
  /// Recomputes the natural mirror from the internal points.
  void refreshNatural();
};

/// Maps sphere points onto the ellipsoids
///   (w - w_hat)^T E D E^T (w - w_hat) = chi2_dim upper-alpha quantile
/// via w = w_hat + sqrt(c) E D^(-1/2) x.
RepresentativeSet contourPoints(const QuadApprox& q, std::span<const double> alphas,
                                int nPerContour, std::uint64_t seed,
                                const SphereOptions& sphere = {});

/// Quadratic form (w - w_hat)^T E D E^T (w - w_hat) in free coordinates.
double contourQuadraticForm(const QuadApprox& q, const InternalParams& w);

/// Points with a negative sampled nu: a seeded random half (rounded down)
/// get nuggetSq = 0, the rest nuggetSq ~ Uniform(0, 2).
RepresentativeSet repairNugget(RepresentativeSet set, std::uint64_t seed);

/// m equally spaced values spanning center +- z_0.99 (-curvature)^(-1/2),
/// with the center appended (duplicates dropped), sorted. Non-negative
/// curvature falls back to center +- 1.
std::vector<double> lambdaGrid(double center, double curvature, int m);

void writeRepresentativeSetCsv(const RepresentativeSet& set, const std::string& path);
RepresentativeSet readRepresentativeSetCsv(const std::string& path);

}  // namespace geoprof
