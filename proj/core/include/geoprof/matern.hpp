#pragma once

// Anisotropic Matern correlation.
//
//   rho(d) = 2^(1-kappa) / Gamma(kappa) * (sqrt(8 kappa) d)^kappa * K_kappa(sqrt(8 kappa) d)
//
// with d the anisotropic distance below. The prefactor is 2^(1-kappa), which
// gives rho(0) = 1. Under this scaling kappa = 0.5 is exp(-2d) and the
// kappa -> infinity limit is exp(-2 d^2).

#include "geoprof/bessel.hpp"
#include "geoprof/matrix_batch.hpp"
#include "geoprof/model.hpp"

#include <Eigen/Dense>

#include <span>

namespace geoprof {

inline constexpr double kGaussianLimitKappa = 1e3;

/// || diag(1/phiX, 1/phiY) * Rot(phiA) * h ||_2
double anisotropicDistance(double hx, double hy, double phiX, double phiY, double phiA);

/// Correlation at anisotropic distance d. Uses exp(-2d) for kappa == 0.5 and
/// the Gaussian limit exp(-2 d^2) for kappa >= gaussianLimit.
double maternRho(double d, double kappa, double gaussianLimit = kGaussianLimitKappa);

/// Fixed-shape evaluator; caches the order-dependent constants.
class MaternCorrelation {
 public:
  explicit MaternCorrelation(double kappa, double gaussianLimit = kGaussianLimitKappa);
  [[nodiscard]] double operator()(double d) const;
  [[nodiscard]] double kappa() const { return kappa_; }

 private:
  enum class Form { exponential, gaussian, bessel };
  double kappa_;
  Form form_;
  double sqrt8k_ = 0.0;
  double logPrefactor_ = 0.0;  // (1 - kappa) log 2 - lgamma(kappa)
  BesselKOrder bessel_;
};

struct MaternOptions {
  int threads = 0;  // 0: OpenMP default
  double gaussianLimit = kGaussianLimitKappa;
};

/// out(k, i, j) = rho(s_i - s_j; params[k]) + nuggetSq_k * [i == j]. Only the
/// lower triangle is evaluated; the upper triangle is an exact mirror.
/// `out` must already hold params.size() matrices of size n x n.
template <typename T>
void maternBatch(const Eigen::MatrixXd& coords, std::span<const NaturalParams> params,
                 CorrelationMatrixBatch<T>& out, MaternOptions opts = {});

/// Dense n x n correlation + nugget matrix for one parameter set.
Eigen::MatrixXd maternMatrix(const Eigen::MatrixXd& coords, const NaturalParams& params);

}  // namespace geoprof
