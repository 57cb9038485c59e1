#pragma once

namespace geoprof {

/// Natural log of the modified Bessel function of the second kind, K_nu(x),
/// for nu >= 0 and x > 0. Works in exponentially scaled form internally, so
/// it neither overflows for large orders at small x nor underflows at large x.
double logBesselK(double nu, double x);

/// Exponentially scaled K: exp(x) * K_nu(x). May overflow for large nu at
/// small x; prefer logBesselK there.
double besselKScaled(double nu, double x);

/// Precomputed state for repeated evaluation at one fixed order.
class BesselKOrder {
 public:
  explicit BesselKOrder(double nu);

  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] double logK(double x) const;

 private:
  void pairScaled(double x, double& kmu, double& kmu1) const;

  double nu_;
  double mu_;   // nu - nl, in [-1/2, 1/2)
  int nl_;      // number of forward recurrence steps
  double gam1_;
  double gam2_;
  double gampl_;  // 1 / Gamma(1 + mu)
  double gammi_;  // 1 / Gamma(1 - mu)
  double fact_;   // pi mu / sin(pi mu)
};

}  // namespace geoprof
