#pragma once

// Profile log-likelihood evaluation for many covariance parameter sets and
// Box-Cox exponents at once.
//
// For each parameter set k, one factorization V_k = L D L^T serves every
// lambda: the M transformed response columns are stacked next to X and the
// whole block (Y', X) goes through a single forward substitution.

#include "geoprof/batchlinalg.hpp"
#include "geoprof/matrix_batch.hpp"
#include "geoprof/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace geoprof {

enum class LikMode { ML, REML };
enum class Precision { Double, Single };

const char* toString(LikMode m);

/// Retained statistics per parameter set (struct-of-arrays over K sets and
/// M Box-Cox values).
struct LikSummaries {
  std::size_t K = 0;
  std::size_t M = 0;
  std::size_t p = 0;
  std::size_t n = 0;
  double sumLogY = 0.0;           // 0 when every lambda is 1 (no logs needed)
  std::vector<double> detVar;     // K: log|V|
  std::vector<double> detReml;    // K: log|X^T V^-1 X|
  MatrixBatch<double> ssqYX;      // K x (M+p) x (M+p): (Y', X)^T V^-1 (Y', X)
  std::vector<double> ssqBetahat; // K*M
  std::vector<double> ssqResidual;// K*M
  std::vector<double> jacobian;   // M: (lambda_m - 1) sum log y

  [[nodiscard]] double yVy(std::size_t k, std::size_t m) const { return ssqYX(k, m, m); }
  [[nodiscard]] double xVy(std::size_t k, std::size_t a, std::size_t m) const {
    return ssqYX(k, M + a, m);
  }
  [[nodiscard]] double xVx(std::size_t k, std::size_t a, std::size_t b) const {
    return ssqYX(k, M + a, M + b);
  }
  [[nodiscard]] double residual(std::size_t k, std::size_t m) const {
    return ssqResidual[k * M + m];
  }
};

struct LikGrid {
  LikMode mode = LikMode::ML;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<NaturalParams> omegaSets;  // lambda field of these is ignored
  std::vector<double> lambdaGrid;
  Eigen::MatrixXd logLik;    // K x M, -inf where invalid
  Eigen::MatrixXd sigmaHat;  // K x M, standard deviation sqrt(sigma^2-hat)
  std::vector<double> betaHat;  // K * M * p
  std::vector<SetStatus> status;
  LikSummaries summaries;

  [[nodiscard]] std::size_t K() const { return omegaSets.size(); }
  [[nodiscard]] std::size_t M() const { return lambdaGrid.size(); }
  [[nodiscard]] double beta(std::size_t k, std::size_t m, std::size_t a) const {
    return betaHat[(k * M() + m) * p + a];
  }
  /// Maximum over lambda for set k.
  [[nodiscard]] double bestOverLambda(std::size_t k) const;
  /// (k, m) of the overall maximum.
  [[nodiscard]] std::pair<std::size_t, std::size_t> argmax() const;
};

struct EvaluateOptions {
  std::size_t batchSize = 400;
  int threads = 0;
  Precision precision = Precision::Double;
  // Tolerance on negative residual sums of squares, relative to y'V^-1y'.
  double residualTolerance = 1e-8;
};

/// Profile log-likelihood l_p(omega_k, lambda_m) for every combination,
/// processing the K sets in waves of at most batchSize.
LikGrid evaluateBatch(const Dataset& d, std::span<const NaturalParams> omegaSets,
                      std::span<const double> lambdaGrid, LikMode mode,
                      const EvaluateOptions& opts = {});

/// Box-Cox transform that is also defined for non-positive responses when
/// lambda == 1 (shift by -1).
Eigen::VectorXd transformResponse(const Eigen::VectorXd& y, double lambda);

/// -2 log-likelihood constant-free form evaluated at explicit (beta, sigma^2);
/// returns the log-likelihood. Uses the dataset's y with params.lambda().
double fullLogLik(const Dataset& d, const NaturalParams& params, const ScaleParams& scale);

/// Profile log-likelihood of one set through the batch engine (K = M = 1).
double profileLogLik(const Dataset& d, const NaturalParams& params, LikMode mode);

struct RemlIdentity {
  // log|A V A^T| vs log|V| + log|X^T V^-1 X| + log|A A^T| - log|X^T X|
  double lhsLogDet = 0.0;
  double rhsLogDet = 0.0;
  // y*^T (A V A^T)^-1 y* vs (y' - X betahat)^T V^-1 (y' - X betahat)
  double lhsQuad = 0.0;
  double rhsQuad = 0.0;
};

/// Builds an explicit error-contrast matrix A (n - p rows of I - X(X^TX)^-1X^T)
/// and evaluates both sides of the two REML identities. Test scale only.
RemlIdentity remlDeterminantIdentity(const Dataset& d, const NaturalParams& params,
                                     double sigmaSq = 1.0);

}  // namespace geoprof
