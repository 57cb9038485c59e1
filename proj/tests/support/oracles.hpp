#pragma once

// Reference implementations used only by the tests. Everything here is
// written directly from the model definition with dense textbook linear
// algebra and Boost special functions, so it shares no code with the
// library beyond the plain data types.

#include "geoprof/likelihood.hpp"
#include "geoprof/model.hpp"
#include "geoprof/reparam.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace geoprof::oracle {

inline double matern(double d, double kappa) {
  if (d == 0.0) return 1.0;
  const double u = std::sqrt(8.0 * kappa) * d;
  return std::pow(2.0, 1.0 - kappa) / boost::math::tgamma(kappa) * std::pow(u, kappa) *
         boost::math::cyl_bessel_k(kappa, u);
}

inline double distance(double hx, double hy, const NaturalParams& p) {
  const double c = std::cos(p.phiA());
  const double s = std::sin(p.phiA());
  const double u = (c * hx - s * hy) / p.phiX();
  const double v = (s * hx + c * hy) / p.phiY();
  return std::hypot(u, v);
}

inline Eigen::MatrixXd correlation(const Eigen::MatrixXd& coords, const NaturalParams& p) {
  const Eigen::Index n = coords.rows();
  Eigen::MatrixXd V(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = distance(coords(i, 0) - coords(j, 0), coords(i, 1) - coords(j, 1), p);
      V(i, j) = matern(d, p.kappa()) + (i == j ? p.nuggetSq() : 0.0);
    }
  }
  return V;
}

inline Eigen::VectorXd boxcox(const Eigen::VectorXd& y, double lambda) {
  if (lambda == 1.0) return y.array() - 1.0;
  if (lambda == 0.0) return y.array().log();
  return (y.array().pow(lambda) - 1.0) / lambda;
}

struct Fit {
  double logLik = 0.0;
  Eigen::VectorXd beta;
  double sigmaSq = 0.0;
};

/// Profile log-likelihood with an explicit inverse. REML uses the
/// n - p divisor and adds -log|X^T V^-1 X| / 2.
inline Fit profileLikelihood(const Dataset& d, const NaturalParams& p, bool reml) {
  const double n = static_cast<double>(d.n());
  const double q = static_cast<double>(d.p());
  const Eigen::MatrixXd V = correlation(d.coords, p);
  const Eigen::MatrixXd Vi = V.fullPivLu().inverse();
  const Eigen::VectorXd z = boxcox(d.y, p.lambda());
  const Eigen::MatrixXd XtViX = d.X.transpose() * Vi * d.X;
  Fit f;
  f.beta = XtViX.fullPivLu().solve(d.X.transpose() * Vi * z);
  const Eigen::VectorXd r = z - d.X * f.beta;
  const double rss = r.dot(Vi * r);
  const double dof = reml ? n - q : n;
  f.sigmaSq = rss / dof;
  const double logDetV = std::log(V.determinant());
  double jac = 0.0;
  if (p.lambda() != 1.0) jac = (p.lambda() - 1.0) * d.y.array().log().sum();
  double m2 = dof * std::log(f.sigmaSq) + logDetV + dof + n * std::log(2.0 * std::numbers::pi);
  if (reml) m2 += std::log(XtViX.determinant());
  f.logLik = -0.5 * m2 + jac;
  return f;
}

/// Full Gaussian log-likelihood at explicit (beta, sigma^2) through the
/// multivariate normal density.
inline double fullLikelihood(const Dataset& d, const NaturalParams& p, const Eigen::VectorXd& beta,
                             double sigmaSq) {
  const double n = static_cast<double>(d.n());
  const Eigen::MatrixXd S = sigmaSq * correlation(d.coords, p);
  const Eigen::VectorXd r = boxcox(d.y, p.lambda()) - d.X * beta;
  double jac = 0.0;
  if (p.lambda() != 1.0) jac = (p.lambda() - 1.0) * d.y.array().log().sum();
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + std::log(S.determinant()) +
                 r.dot(S.fullPivLu().solve(r))) +
         jac;
}

/// Random well-separated dataset with a positive response.
inline Dataset randomDataset(std::mt19937_64& rng, int n, int p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  d.coords.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    d.coords(i, 0) = 10.0 * u(rng);
    d.coords(i, 1) = 10.0 * u(rng);
  }
  d.X.resize(n, p);
  d.X.col(0).setOnes();
  for (int a = 1; a < p; ++a) {
    for (int i = 0; i < n; ++i) d.X(i, a) = u(rng) * 2.0 - 1.0;
    d.covariateNames.push_back("x" + std::to_string(a));
  }
  d.covariateNames.insert(d.covariateNames.begin(), "(Intercept)");
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y(i) = 1.0 + 4.0 * u(rng);
  return d;
}

/// Random natural parameters for coordinates on a 10 x 10 square.
inline NaturalParams randomParams(std::mt19937_64& rng, bool boxcoxFree = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double phiY = 1.0 + 4.0 * u(rng);
  const double phiX = phiY * (1.0 + 2.0 * u(rng));
  const double angle = (u(rng) - 0.5) * 3.0;
  const double kappa = 0.3 + 4.0 * u(rng);
  const double nugget = 0.05 + u(rng);
  const double lambda = boxcoxFree ? -0.5 + 2.0 * u(rng) : 1.0;
  return {phiX, phiY, angle, kappa, nugget, lambda};
}

/// Likelihood grid whose log-likelihood is exactly Gaussian in the free
/// internal coordinates (gamma1, nu, gamma2, gamma3), shape fixed at 1:
///   l(w) = -(w - mu)^T Sigma^-1 (w - mu) / 2,
/// so the profile of coordinate i is -(w_i - mu_i)^2 / (2 Sigma_ii).
/// The cloud holds, for every coordinate, `ridge` points on the profile
/// path w_-i = mu_-i + Sigma_-i,i (w_i - mu_i) / Sigma_ii over mu_i +- 4 sd,
/// plus `scatter` draws from N(mu, Sigma) kept within 3.9 sd per coordinate,
/// so hull vertices are exactly the ridge points.
struct GaussianCloud {
  Eigen::Vector4d mu;
  Eigen::Matrix4d Sigma;
  LikGrid grid;

  [[nodiscard]] double logLik(const Eigen::Vector4d& w) const {
    const Eigen::Vector4d r = w - mu;
    return -0.5 * r.dot(Sigma.ldlt().solve(r));
  }
  [[nodiscard]] double profile(int i, double wi) const {
    return -0.5 * (wi - mu[i]) * (wi - mu[i]) / Sigma(i, i);
  }
  static Eigen::Vector4d freeCoords(const NaturalParams& p) {
    const InternalParams w = toInternal(p, KappaRegime::log);
    return {w.gamma1, w.nu, w.gamma2, w.gamma3};
  }
};

inline GaussianCloud gaussianCloud(std::uint64_t seed, int ridge = 401, int scatter = 2000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  GaussianCloud c;
  c.mu << 14.0, 5.0, 0.3, -0.2;
  // pairwise correlations in [-0.3, 0.3]
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Eigen::Matrix4d C = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) C(i, j) = C(j, i) = u(rng);
  const Eigen::Vector4d sd(0.4, 0.5, 0.6, 0.3);
  c.Sigma = sd.asDiagonal() * C * sd.asDiagonal();

  std::vector<Eigen::Vector4d> pts;
  for (int i = 0; i < 4; ++i) {
    const double s = std::sqrt(c.Sigma(i, i));
    for (int k = 0; k < ridge; ++k) {
      const double wi = c.mu[i] - 4.0 * s + 8.0 * s * k / (ridge - 1);
      pts.push_back(c.mu + c.Sigma.col(i) * ((wi - c.mu[i]) / c.Sigma(i, i)));
    }
  }
  const Eigen::Matrix4d L = c.Sigma.llt().matrixL();
  while (static_cast<int>(pts.size()) < 4 * ridge + scatter) {
    Eigen::Vector4d e;
    for (int i = 0; i < 4; ++i) e[i] = z(rng);
    const Eigen::Vector4d w = c.mu + L * e;
    if (((w - c.mu).array().abs() / c.Sigma.diagonal().array().sqrt() < 3.9).all()) pts.push_back(w);
  }

  c.grid.mode = LikMode::ML;
  c.grid.n = 50;
  c.grid.p = 1;
  c.grid.lambdaGrid = {1.0};
  c.grid.logLik.resize(static_cast<Eigen::Index>(pts.size()), 1);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Eigen::Vector4d& w = pts[k];
    c.grid.omegaSets.push_back(toNatural({w[0], 0.0, w[1], w[2], w[3]}, KappaRegime::log));
    c.grid.logLik(static_cast<Eigen::Index>(k), 0) = c.logLik(w);
  }
  c.grid.status.assign(pts.size(), SetStatus::ok);
  return c;
}

}  // namespace geoprof::oracle
