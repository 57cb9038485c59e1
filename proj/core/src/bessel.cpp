#include "geoprof/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

// Temme's series for small arguments and Steed's continued fraction (CF2) for
// x >= 2 give the pair K_mu, K_{mu+1} with |mu| <= 1/2; the forward
// recurrence, which is stable for K, then climbs to the requested order.

namespace geoprof {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;
constexpr double kEulerGamma = 0.57721566490153286061;
// x^3 coefficient of 1 / Gamma(1 + x)
constexpr double kRecipGammaC4 = -0.0420026350340952355;

}  // namespace

BesselKOrder::BesselKOrder(double nu) : nu_(nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::domain_error("Bessel order must be >= 0");
  nl_ = static_cast<int>(nu + 0.5);
  mu_ = nu - nl_;
  gampl_ = 1.0 / std::tgamma(1.0 + mu_);
  gammi_ = 1.0 / std::tgamma(1.0 - mu_);
  gam2_ = 0.5 * (gammi_ + gampl_);
  if (std::abs(mu_) < 1e-3) {
    gam1_ = -kEulerGamma - kRecipGammaC4 * mu_ * mu_;
  } else {
    gam1_ = (gammi_ - gampl_) / (2.0 * mu_);
  }
  const double pimu = std::numbers::pi * mu_;
  fact_ = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
}

void BesselKOrder::pairScaled(double x, double& kmu, double& kmu1) const {
  const double mu = mu_;
  if (x < 2.0) {
    const double x2 = 0.5 * x;
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double ff = fact_ * (gam1_ * std::cosh(e) + gam2_ * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl_;
    double q = 0.5 / (e * gammi_);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      const double di = i;
      ff = (di * ff + p + q) / (di * di - mu * mu);
      c *= d / di;
      p /= di - mu;
      q /= di + mu;
      const double del = c * ff;
      sum += del;
      const double del1 = c * (p - di * ff);
      sum1 += del1;
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > kMaxIter) throw std::runtime_error("Bessel K series failed to converge");
    const double scale = std::exp(x);
    kmu = sum * scale;
    kmu1 = sum1 * (2.0 / x) * scale;
    return;
  }

  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  int i = 1;
  for (; i <= kMaxIter; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  if (i > kMaxIter) throw std::runtime_error("Bessel K continued fraction failed to converge");
  h = a1 * h;
  kmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
  kmu1 = kmu * (mu + x + 0.5 - h) / x;
}

double BesselKOrder::logK(double x) const {
  if (!(x > 0.0)) throw std::domain_error("Bessel K argument must be > 0");
  double kmu = 0.0;
  double kmu1 = 0.0;
  pairScaled(x, kmu, kmu1);
  if (nl_ == 0) return std::log(kmu) - x;

  // Recurrence on the scaled values, renormalising to keep them finite.
  double logScale = 0.0;
  double km = kmu;
  double kc = kmu1;
  const double twoOverX = 2.0 / x;
  for (int i = 1; i < nl_; ++i) {
    const double kn = (mu_ + i) * twoOverX * kc + km;
    km = kc;
    kc = kn;
    if (kc > 1e250) {
      logScale += std::log(kc);
      km /= kc;
      kc = 1.0;
    }
  }
  return std::log(kc) + logScale - x;
}

double logBesselK(double nu, double x) { return BesselKOrder(nu).logK(x); }

double besselKScaled(double nu, double x) { return std::exp(logBesselK(nu, x) + x); }

}  // namespace geoprof
