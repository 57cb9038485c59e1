#include "geoprof/likelihood.hpp"

#include "geoprof/matern.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace geoprof {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

struct WaveContext {
  const Dataset& d;
  const Eigen::MatrixXd& yCols;  // n x M transformed responses
  std::span<const double> lambdas;
  LikMode mode;
  const EvaluateOptions& opts;
  LikGrid& grid;
};

template <typename T>
void evaluateWave(const WaveContext& ctx, std::size_t offset, std::size_t count) {
  const Dataset& d = ctx.d;
  const auto n = static_cast<std::size_t>(d.n());
  const auto p = static_cast<std::size_t>(d.p());
  const std::size_t M = ctx.lambdas.size();
  const std::size_t q = M + p;
  const BatchOptions bopts{ctx.opts.threads};
  LikGrid& grid = ctx.grid;
  LikSummaries& sum = grid.summaries;

  // Step 1: variance matrices
  MatrixBatch<T> V(count, n, n);
  maternBatch<T>(d.coords, std::span<const NaturalParams>(grid.omegaSets).subspan(offset, count),
                 V, MaternOptions{ctx.opts.threads});

  // Step 2: V = L D L^T, in place
  auto f = cholBatch<T>(std::move(V), bopts);

  // Step 3: L^-1 (Y', X)
  MatrixBatch<T> B(1, n, q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < M; ++m)
      B(0, i, m) = static_cast<T>(ctx.yCols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)));
    for (std::size_t a = 0; a < p; ++a)
      B(0, i, M + a) = static_cast<T>(d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)));
  }
  const auto C = backsolveBatch<T>(f, B, bopts);

  // Step 4: (Y', X)^T V^-1 (Y', X)
  std::vector<SetStatus> status = f.status;
  const auto S = crossprodBatch<T>(C, std::span<const T>(f.D), CrossprodWeight::Dinverse,
                                   status, bopts);

  // Step 5: X^T V^-1 X = Q P Q^T
  MatrixBatch<T> xvx(count, p, p);
  MatrixBatch<T> xvy(count, p, M);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) xvx(k, a, b) = S(k, M + a, M + b);
      for (std::size_t m = 0; m < M; ++m) xvy(k, a, m) = S(k, M + a, m);
    }
  }
  const auto g = cholBatch<T>(std::move(xvx), bopts);
  for (std::size_t k = 0; k < count; ++k) {
    if (status[k] == SetStatus::ok && g.status[k] != SetStatus::ok) status[k] = g.status[k];
  }

  // Step 6: c = Q^-1 X^T V^-1 y'
  const auto c = backsolveBatch<T>(g, xvy, bopts);

  // Step 7: ssqBetahat = c^T P^-1 c (diagonal used)
  const auto bh = crossprodBatch<T>(c, std::span<const T>(g.D), CrossprodWeight::Dinverse,
                                    status, bopts);

  // Step 8 and likelihood assembly
  const double nd = static_cast<double>(n);
  const double dof = ctx.mode == LikMode::ML ? nd : nd - static_cast<double>(p);
  for (std::size_t kk = 0; kk < count; ++kk) {
    const std::size_t k = offset + kk;
    sum.detVar[k] = f.logDet[kk];
    sum.detReml[k] = g.logDet[kk];
    for (std::size_t r = 0; r < q; ++r)
      for (std::size_t s = 0; s < q; ++s) sum.ssqYX(k, r, s) = static_cast<double>(S(kk, r, s));

    bool failed = status[kk] != SetStatus::ok;
    for (std::size_t m = 0; m < M && !failed; ++m) {
      const double yy = static_cast<double>(S(kk, m, m));
      const double fitted = static_cast<double>(bh(kk, m, m));
      double resid = yy - fitted;
      if (resid < 0.0) {
        if (resid < -ctx.opts.residualTolerance * std::abs(yy)) {
          failed = true;
          status[kk] = SetStatus::numericalFailure;
          break;
        }
        resid = 0.0;
      }
      sum.ssqBetahat[k * M + m] = fitted;
      sum.ssqResidual[k * M + m] = resid;

      // beta = Q^-T P^-1 c
      for (std::size_t a = p; a-- > 0;) {
        double v = static_cast<double>(c(kk, a, m)) / static_cast<double>(g.D[kk * p + a]);
        for (std::size_t b = a + 1; b < p; ++b)
          v -= static_cast<double>(g.L(kk, b, a)) * grid.betaHat[(k * M + m) * p + b];
        grid.betaHat[(k * M + m) * p + a] = v;
      }

      const double sigmaSq = resid / dof;
      grid.sigmaHat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = std::sqrt(sigmaSq);
      if (!(resid > 0.0)) {
        grid.logLik(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = kNegInf;
        continue;
      }
      double m2ll = dof * std::log(sigmaSq) + f.logDet[kk] - 2.0 * sum.jacobian[m] +
                    nd * kLog2Pi + dof;
      if (ctx.mode == LikMode::REML) m2ll += g.logDet[kk];
      grid.logLik(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = -0.5 * m2ll;
    }
    grid.status[k] = status[kk];
    if (failed) {
      for (std::size_t m = 0; m < M; ++m) {
        grid.logLik(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = kNegInf;
        grid.sigmaHat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) =
            std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
}

}  // namespace

const char* toString(LikMode m) { return m == LikMode::ML ? "ML" : "REML"; }

double LikGrid::bestOverLambda(std::size_t k) const {
  return logLik.row(static_cast<Eigen::Index>(k)).maxCoeff();
}

std::pair<std::size_t, std::size_t> LikGrid::argmax() const {
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  logLik.maxCoeff(&r, &c);
  return {static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

Eigen::VectorXd transformResponse(const Eigen::VectorXd& y, double lambda) {
  if (lambda == 1.0) return y.array() - 1.0;
  return boxcoxTransform(y, lambda);
}

LikGrid evaluateBatch(const Dataset& d, std::span<const NaturalParams> omegaSets,
                      std::span<const double> lambdaGrid, LikMode mode,
                      const EvaluateOptions& opts) {
  if (opts.batchSize < 1) throw std::invalid_argument("batchSize must be >= 1");
  if (omegaSets.empty() || lambdaGrid.empty())
    throw std::invalid_argument("evaluateBatch needs at least one parameter set and one lambda");
  const std::size_t K = omegaSets.size();
  const std::size_t M = lambdaGrid.size();
  const auto n = static_cast<std::size_t>(d.n());
  const auto p = static_cast<std::size_t>(d.p());
  if (mode == LikMode::REML && n <= p) throw std::invalid_argument("REML needs n > p");

  LikGrid grid;
  grid.mode = mode;
  grid.n = n;
  grid.p = p;
  grid.omegaSets.assign(omegaSets.begin(), omegaSets.end());
  grid.lambdaGrid.assign(lambdaGrid.begin(), lambdaGrid.end());
  grid.logLik = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(M), kNegInf);
  grid.sigmaHat = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(M),
                                            std::numeric_limits<double>::quiet_NaN());
  grid.betaHat.assign(K * M * p, std::numeric_limits<double>::quiet_NaN());
  grid.status.assign(K, SetStatus::ok);

  LikSummaries& s = grid.summaries;
  s.K = K;
  s.M = M;
  s.p = p;
  s.n = n;
  s.detVar.assign(K, std::numeric_limits<double>::quiet_NaN());
  s.detReml.assign(K, std::numeric_limits<double>::quiet_NaN());
  s.ssqYX = MatrixBatch<double>(K, M + p, M + p);
  s.ssqBetahat.assign(K * M, std::numeric_limits<double>::quiet_NaN());
  s.ssqResidual.assign(K * M, std::numeric_limits<double>::quiet_NaN());

  const bool needLogs = std::any_of(lambdaGrid.begin(), lambdaGrid.end(),
                                    [](double l) { return l != 1.0; });
  const std::span<const double> ySpan(d.y.data(), n);
  s.sumLogY = needLogs ? sumLogResponse(ySpan) : 0.0;
  s.jacobian.resize(M);
  Eigen::MatrixXd yCols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(M));
  for (std::size_t m = 0; m < M; ++m) {
    s.jacobian[m] = (lambdaGrid[m] - 1.0) * s.sumLogY;
    yCols.col(static_cast<Eigen::Index>(m)) = transformResponse(d.y, lambdaGrid[m]);
  }

  const WaveContext ctx{d, yCols, lambdaGrid, mode, opts, grid};
  for (std::size_t offset = 0; offset < K; offset += opts.batchSize) {
    const std::size_t count = std::min(opts.batchSize, K - offset);
    if (opts.precision == Precision::Single) {
      evaluateWave<float>(ctx, offset, count);
    } else {
      evaluateWave<double>(ctx, offset, count);
    }
  }
  return grid;
}

double fullLogLik(const Dataset& d, const NaturalParams& params, const ScaleParams& scale) {
  if (!(scale.sigmaSq > 0.0)) throw std::invalid_argument("sigma^2 must be > 0");
  if (scale.beta.size() != d.p()) throw std::invalid_argument("beta has the wrong length");
  const auto n = static_cast<double>(d.n());
  const Eigen::MatrixXd V = maternMatrix(d.coords, params);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("variance matrix is not positive definite");
  const Eigen::VectorXd r = transformResponse(d.y, params.lambda()) - d.X * scale.beta;
  const double quad = r.dot(ldlt.solve(r)) / scale.sigmaSq;
  const double logDetV = ldlt.vectorD().array().log().sum();
  const double jac =
      params.lambda() == 1.0
          ? 0.0
          : boxcoxJacobianLog(std::span<const double>(d.y.data(), static_cast<std::size_t>(d.y.size())),
                              params.lambda());
  const double m2ll = quad + n * std::log(scale.sigmaSq) + logDetV - 2.0 * jac + n * kLog2Pi;
  return -0.5 * m2ll;
}

double profileLogLik(const Dataset& d, const NaturalParams& params, LikMode mode) {
  const double lambda = params.lambda();
  const auto grid = evaluateBatch(d, std::span<const NaturalParams>(&params, 1),
                                  std::span<const double>(&lambda, 1), mode, {1, 1});
  return grid.logLik(0, 0);
}

RemlIdentity remlDeterminantIdentity(const Dataset& d, const NaturalParams& params,
                                     double sigmaSq) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd A;
  double logDetXtX = 0.0;
  if (p == 0) {
    A = I;
  } else {
    const Eigen::MatrixXd XtX = d.X.transpose() * d.X;
    Eigen::LDLT<Eigen::MatrixXd> xtx(XtX);
    logDetXtX = xtx.vectorD().array().log().sum();
    const Eigen::MatrixXd S = I - d.X * xtx.solve(d.X.transpose());
    // Greedy selection of n - p independent rows of S.
    A.resize(n - p, n);
    Eigen::Index chosen = 0;
    Eigen::MatrixXd basis(n - p, n);  // orthonormalized copies of the chosen rows
    for (Eigen::Index i = 0; i < n && chosen < n - p; ++i) {
      Eigen::RowVectorXd v = S.row(i);
      for (Eigen::Index b = 0; b < chosen; ++b) v -= v.dot(basis.row(b)) * basis.row(b);
      if (v.norm() > 1e-8 * std::max(1.0, S.row(i).norm())) {
        A.row(chosen) = S.row(i);
        basis.row(chosen) = v / v.norm();
        ++chosen;
      }
    }
    if (chosen < n - p)
      throw std::runtime_error("could not select n - p independent contrast rows");
  }

  const Eigen::MatrixXd V = sigmaSq * maternMatrix(d.coords, params);
  const Eigen::MatrixXd AVA = A * V * A.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ava(AVA);
  Eigen::LDLT<Eigen::MatrixXd> v(V);
  Eigen::LDLT<Eigen::MatrixXd> aat(A * A.transpose());

  RemlIdentity out;
  out.lhsLogDet = ava.vectorD().array().log().sum();
  out.rhsLogDet = v.vectorD().array().log().sum() + aat.vectorD().array().log().sum() - logDetXtX;

  const Eigen::VectorXd yt = transformResponse(d.y, params.lambda());
  Eigen::VectorXd resid = yt;
  if (p > 0) {
    const Eigen::MatrixXd XtViX = d.X.transpose() * v.solve(d.X);
    Eigen::LDLT<Eigen::MatrixXd> xvx(XtViX);
    out.rhsLogDet += xvx.vectorD().array().log().sum();
    const Eigen::VectorXd beta = xvx.solve(d.X.transpose() * v.solve(yt));
    resid = yt - d.X * beta;
  }
  const Eigen::VectorXd ystar = A * yt;
  out.lhsQuad = ystar.dot(ava.solve(ystar));
  out.rhsQuad = resid.dot(v.solve(resid));
  return out;
}

}  // namespace geoprof
