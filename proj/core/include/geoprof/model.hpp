#pragma once

// Domain types shared by every stage of the pipeline: the observed dataset,
// natural covariance parameters, scale parameters and the Box-Cox transform.

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoprof {

/// Input data that violates a dataset invariant (duplicate locations,
/// rank-deficient design, unreadable file, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (e.g. log of a
/// non-positive response).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Dataset {
  Eigen::MatrixXd coords;  // n x 2
  Eigen::VectorXd y;       // response on the original scale
  Eigen::MatrixXd X;       // n x p, first column is the intercept by convention
  std::vector<std::string> covariateNames;

  [[nodiscard]] Eigen::Index n() const { return y.size(); }
  [[nodiscard]] Eigen::Index p() const { return X.cols(); }
};

/// Covariance parameters in their natural parametrization.
///
/// Construction normalizes the anisotropy so that phiX >= phiY and
/// phiA lies in (-pi/2, pi/2]. Swapping the two ranges and rotating by pi/2
/// describes the same correlation structure, as does rotating by pi.
class NaturalParams {
 public:
  NaturalParams() = default;
  NaturalParams(double phiX, double phiY, double phiA, double kappa,
                double nuggetSq, double lambda = 1.0);

  /// Isotropic convenience constructor.
  static NaturalParams isotropic(double range, double kappa, double nuggetSq,
                                 double lambda = 1.0) {
    return {range, range, 0.0, kappa, nuggetSq, lambda};
  }

  [[nodiscard]] double phiX() const { return phiX_; }
  [[nodiscard]] double phiY() const { return phiY_; }
  [[nodiscard]] double phiA() const { return phiA_; }
  [[nodiscard]] double kappa() const { return kappa_; }
  [[nodiscard]] double nuggetSq() const { return nuggetSq_; }
  [[nodiscard]] double lambda() const { return lambda_; }

  /// phiX / phiY, always >= 1.
  [[nodiscard]] double ratio() const { return phiX_ / phiY_; }
  /// Geometric mean sqrt(phiX * phiY).
  [[nodiscard]] double combinedRange() const;

  [[nodiscard]] NaturalParams withLambda(double lambda) const;
  [[nodiscard]] NaturalParams withKappa(double kappa) const;
  [[nodiscard]] NaturalParams withNuggetSq(double nuggetSq) const;

 private:
  double phiX_ = 1.0;
  double phiY_ = 1.0;
  double phiA_ = 0.0;
  double kappa_ = 0.5;
  double nuggetSq_ = 0.0;
  double lambda_ = 1.0;
};

struct ScaleParams {
  double sigmaSq = 1.0;  // spatial variance
  double tauSq = 0.0;    // observation variance, sigmaSq * nuggetSq
  Eigen::VectorXd beta;
};

/// Reduces an angle to the half-open interval (-pi/2, pi/2].
double wrapAngleHalfPi(double angle);

/// Box-Cox transform. The log branch is used whenever |lambda| < 1e-10.
/// Throws DomainError naming the first non-positive element.
Eigen::VectorXd boxcoxTransform(std::span<const double> y, double lambda);
inline Eigen::VectorXd boxcoxTransform(const Eigen::VectorXd& y, double lambda) {
  return boxcoxTransform(std::span<const double>(y.data(), static_cast<size_t>(y.size())), lambda);
}

/// Inverse Box-Cox transform; requires lambda * z + 1 > 0 for lambda != 0.
Eigen::VectorXd boxcoxInverse(const Eigen::VectorXd& z, double lambda);

/// Sum of log y_i. Throws DomainError on non-positive entries.
double sumLogResponse(std::span<const double> y);

/// (lambda - 1) * sum(log y_i): the Box-Cox Jacobian contribution to the
/// log-likelihood.
double boxcoxJacobianLog(std::span<const double> y, double lambda);
inline double boxcoxJacobianLog(const Eigen::VectorXd& y, double lambda) {
  return boxcoxJacobianLog(std::span<const double>(y.data(), static_cast<size_t>(y.size())), lambda);
}

struct ValidationOptions {
  // Box-Cox with lambda != 1 needs log y_i.
  bool requirePositiveResponse = true;
};

/// Throws DataError describing the first violated invariant.
void validateDataset(const Dataset& d, ValidationOptions opts = {});

/// Reads `x,y,response,<covariate...>` CSV. An intercept column is prepended
/// to X; `covariates` selects columns by name (all when empty).
Dataset readDatasetCsv(const std::string& path,
                       const std::vector<std::string>& covariates = {});

void writeDatasetCsv(const Dataset& d, const std::string& path);

}  // namespace geoprof
