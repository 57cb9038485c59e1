#include "geoprof/matern.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace geoprof {

double anisotropicDistance(double hx, double hy, double phiX, double phiY, double phiA) {
  const double c = std::cos(phiA);
  const double s = std::sin(phiA);
  const double u = (c * hx - s * hy) / phiX;
  const double v = (s * hx + c * hy) / phiY;
  return std::hypot(u, v);
}

MaternCorrelation::MaternCorrelation(double kappa, double gaussianLimit)
    : kappa_(kappa), bessel_(kappa > 0.0 && kappa < gaussianLimit && kappa != 0.5 ? kappa : 0.0) {
  if (!(kappa > 0.0)) throw DomainError("Matern shape must be > 0, got " + std::to_string(kappa));
  if (kappa >= gaussianLimit) {
    form_ = Form::gaussian;
  } else if (kappa == 0.5) {
    form_ = Form::exponential;
  } else {
    form_ = Form::bessel;
    sqrt8k_ = std::sqrt(8.0 * kappa);
    logPrefactor_ = (1.0 - kappa) * std::numbers::ln2 - std::lgamma(kappa);
  }
}

double MaternCorrelation::operator()(double d) const {
  if (d <= 0.0) return 1.0;
  switch (form_) {
    case Form::exponential:
      return std::exp(-2.0 * d);
    case Form::gaussian:
      return std::exp(-2.0 * d * d);
    case Form::bessel:
      break;
  }
  const double z = sqrt8k_ * d;
  const double logRho = logPrefactor_ + kappa_ * std::log(z) + bessel_.logK(z);
  // The series is exact at rho(0) = 1; rounding can leave it a hair above.
  return std::min(1.0, std::exp(logRho));
}

double maternRho(double d, double kappa, double gaussianLimit) {
  if (!(d >= 0.0)) throw DomainError("Matern distance must be >= 0");
  return MaternCorrelation(kappa, gaussianLimit)(d);
}

template <typename T>
void maternBatch(const Eigen::MatrixXd& coords, std::span<const NaturalParams> params,
                 CorrelationMatrixBatch<T>& out, MaternOptions opts) {
  const auto n = static_cast<std::size_t>(coords.rows());
  const std::size_t K = params.size();
  if (coords.cols() != 2) throw std::invalid_argument("coordinates must have two columns");
  if (out.count() != K || out.rows() != n || out.cols() != n) {
    throw std::invalid_argument("maternBatch: output batch is " + std::to_string(out.count()) +
                                " x " + std::to_string(out.rows()) + " x " +
                                std::to_string(out.cols()) + ", expected " + std::to_string(K) +
                                " x " + std::to_string(n) + " x " + std::to_string(n));
  }

  std::vector<MaternCorrelation> kernels;
  kernels.reserve(K);
  for (const auto& p : params) kernels.emplace_back(p.kappa(), opts.gaussianLimit);

  const auto rowsTotal = static_cast<long long>(K * n);
  const int threads = opts.threads;
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads > 0 ? threads : omp_get_max_threads()) if (rowsTotal > 64)
  for (long long idx = 0; idx < rowsTotal; ++idx) {
    const auto k = static_cast<std::size_t>(idx) / n;
    const auto i = static_cast<std::size_t>(idx) % n;
    const NaturalParams& p = params[k];
    const MaternCorrelation& rho = kernels[k];
    const double c = std::cos(p.phiA());
    const double s = std::sin(p.phiA());
    const double ix = 1.0 / p.phiX();
    const double iy = 1.0 / p.phiY();
    const double xi = coords(static_cast<Eigen::Index>(i), 0);
    const double yi = coords(static_cast<Eigen::Index>(i), 1);
    for (std::size_t j = 0; j < i; ++j) {
      const double hx = xi - coords(static_cast<Eigen::Index>(j), 0);
      const double hy = yi - coords(static_cast<Eigen::Index>(j), 1);
      const double u = (c * hx - s * hy) * ix;
      const double v = (s * hx + c * hy) * iy;
      const T value = static_cast<T>(rho(std::hypot(u, v)));
      out(k, i, j) = value;
      out(k, j, i) = value;
    }
    out(k, i, i) = static_cast<T>(1.0 + p.nuggetSq());
  }
}

template void maternBatch<double>(const Eigen::MatrixXd&, std::span<const NaturalParams>,
                                  CorrelationMatrixBatch<double>&, MaternOptions);
template void maternBatch<float>(const Eigen::MatrixXd&, std::span<const NaturalParams>,
                                 CorrelationMatrixBatch<float>&, MaternOptions);

Eigen::MatrixXd maternMatrix(const Eigen::MatrixXd& coords, const NaturalParams& params) {
  CorrelationMatrixBatch<double> batch(1, static_cast<std::size_t>(coords.rows()),
                                       static_cast<std::size_t>(coords.rows()));
  maternBatch<double>(coords, std::span<const NaturalParams>(&params, 1), batch, {1});
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      batch.matrix(0).data(), coords.rows(), coords.rows());
}

}  // namespace geoprof
