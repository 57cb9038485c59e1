#include "geoprof/mle.hpp"
#include "geoprof/optimizer.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace geoprof;

namespace {

Dataset simulated(std::uint64_t seed, int n, const NaturalParams& truth) {
  std::mt19937_64 rng(seed);
  Dataset d = oracle::randomDataset(rng, n, 2);
  const Eigen::MatrixXd L = oracle::correlation(d.coords, truth).llt().matrixL();
  std::normal_distribution<double> z;
  Eigen::VectorXd e(n);
  for (int i = 0; i < n; ++i) e(i) = z(rng);
  d.y = (d.X * Eigen::Vector2d(10.0, 1.0) + 1.5 * L * e).array() + 1.0;
  return d;
}

const Dataset& fixture() {
  static const Dataset d = simulated(5, 60, NaturalParams(3.0, 1.5, 0.6, 0.5, 0.3));
  return d;
}

const FitResult& fixtureFit() {
  static const FitResult f = [] {
    FitOptions o;
    o.fixKappa = 0.5;
    o.fixLambda = 1.0;
    return fitMLE(fixture(), o);
  }();
  return f;
}

}  // namespace

TEST(Optimizer, RosenbrockInterior) {
  const BatchObjective f = [](const std::vector<Eigen::VectorXd>& xs) {
    std::vector<double> out;
    for (const auto& x : xs) out.push_back(-(100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2)));
    return out;
  };
  BoxBounds b{Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5)};
  OptimizerOptions o;
  o.maxIter = 2000;
  const auto r = maximizeBox(f, Eigen::Vector2d(-1.2, 1.0), b, o);
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], 1.0, 2e-3);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1]);
}

TEST(Optimizer, ActiveBound) {
  const BatchObjective f = [](const std::vector<Eigen::VectorXd>& xs) {
    std::vector<double> out;
    for (const auto& x : xs) out.push_back(-std::pow(x[0] - 3.0, 2) - std::pow(x[1] + 1.0, 2));
    return out;
  };
  BoxBounds b{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2)};
  const auto r = maximizeBox(f, Eigen::Vector2d(1, 1), b);
  EXPECT_NEAR(r.x[0], 2.0, 1e-10);
  EXPECT_NEAR(r.x[1], 0.0, 1e-10);
  EXPECT_NEAR(r.value, -2.0, 1e-8);
}

TEST(FitMLE, ProfileQuantitiesAtTheMaximum) {
  const FitResult& f = fixtureFit();
  EXPECT_EQ(f.mleNatural.kappa(), 0.5);
  EXPECT_EQ(f.lambdaHat, 1.0);
  const auto ref = oracle::profileLikelihood(fixture(), f.mleNatural.withLambda(1.0), false);
  EXPECT_NEAR(f.logLikAtMax, ref.logLik, 1e-8);
  EXPECT_NEAR(f.sigmaHat * f.sigmaHat, ref.sigmaSq, 1e-8 * ref.sigmaSq);
  for (int a = 0; a < 2; ++a) EXPECT_NEAR(f.betaHat[a], ref.beta[a], 1e-8 * std::max(1.0, std::abs(ref.beta[a])));
}

TEST(FitMLE, BeatsTruthAndNearbyPoints) {
  const FitResult& f = fixtureFit();
  const NaturalParams truth(3.0, 1.5, 0.6, 0.5, 0.3);
  EXPECT_GE(f.logLikAtMax, profileLogLik(fixture(), truth, LikMode::ML));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 0.05);
  for (int i = 0; i < 20; ++i) {
    InternalParams w = f.mleInternal;
    w.gamma1 += z(rng);
    w.nu = std::abs(w.nu + z(rng));
    w.gamma2 += z(rng);
    w.gamma3 += z(rng);
    EXPECT_GE(f.logLikAtMax + 1e-6, profileLogLik(fixture(), toNatural(w, f.regime), LikMode::ML));
  }
}

TEST(FitMLE, RefitIsFixedPoint) {
  const FitResult& f = fixtureFit();
  FitOptions o;
  o.fixKappa = 0.5;
  o.fixLambda = 1.0;
  o.init = f.mleNatural;
  const FitResult g = fitMLE(fixture(), o);
  EXPECT_LT(g.logLikAtMax - f.logLikAtMax, 1e-6);
  EXPECT_GT(g.logLikAtMax - f.logLikAtMax, -1e-6);
}

TEST(FitMLE, FixedShapeIsRestriction) {
  FitOptions free;
  free.fixLambda = 1.0;
  const FitResult full = fitMLE(fixture(), free);
  EXPECT_FALSE(full.fixedKappa);
  for (double k : {0.5, 2.0, 20.0}) {
    FitOptions o = free;
    o.fixKappa = k;
    o.regime = full.regime;
    o.computeWald = false;
    const FitResult r = fitMLE(fixture(), o);
    EXPECT_EQ(r.mleNatural.kappa(), k);
    EXPECT_LE(r.logLikAtMax, full.logLikAtMax + 1e-6) << "kappa " << k;
  }
}

TEST(FitMLE, ConvergesWithinEvaluationBudget) {
  FitOptions o;
  o.starts = 1;
  o.computeWald = false;
  const Dataset d = simulated(9, 100, NaturalParams(4.0, 2.0, -0.4, 1.0, 0.2));
  const FitResult f = fitMLE(d, o);
  EXPECT_NE(f.convergence, Convergence::maxIter);
  EXPECT_LE(f.factorizations, 500);
  ASSERT_EQ(f.starts.size(), 1u);
  const auto& trace = f.starts.front().trace;
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1]);
  EXPECT_GE(f.logLikAtMax, trace.back() - 1e-9);
}

TEST(FitMLE, NonPositiveResponseForcesUnitLambda) {
  Dataset d = fixture();
  d.y(0) = -2.0;
  FitOptions o;
  o.fixKappa = 0.5;
  o.computeWald = false;
  const FitResult f = fitMLE(d, o);
  EXPECT_TRUE(f.lambdaFixed);
  EXPECT_EQ(f.lambdaHat, 1.0);
}

TEST(FitMLE, RemlDiffersFromMl) {
  FitOptions o;
  o.fixKappa = 0.5;
  o.fixLambda = 1.0;
  o.mode = LikMode::REML;
  o.computeWald = false;
  const FitResult r = fitMLE(fixture(), o);
  EXPECT_EQ(r.mode, LikMode::REML);
  const auto ref = oracle::profileLikelihood(fixture(), r.mleNatural.withLambda(1.0), true);
  EXPECT_NEAR(r.logLikAtMax, ref.logLik, 1e-8);
}

TEST(Wald, IntervalsFromInformation) {
  FitResult f = fixtureFit();
  ASSERT_TRUE(f.wald);
  WaldInfo& w = *f.wald;
  const Eigen::Index m = w.estimate.size();
  w.covariance = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) w.covariance(i, i) = 0.01 * static_cast<double>(i + 1);
  w.defined.assign(static_cast<std::size_t>(m), true);
  w.betaCovariance = Eigen::Vector2d(0.04, 0.25).asDiagonal();

  const std::vector<ParamRef> ps{{Param::beta, 1}, {Param::aniso1, 0}, {Param::range, 0}};
  const auto wi = waldIntervals(f, ps, 0.8);
  const double z = 1.2815515655446004;
  ASSERT_TRUE(wi[0].lo && wi[0].hi);
  EXPECT_NEAR(*wi[0].lo, f.betaHat[1] - z * 0.5, 1e-12);
  EXPECT_NEAR(*wi[0].hi, f.betaHat[1] + z * 0.5, 1e-12);

  const auto idx = std::find(w.coordinates.begin(), w.coordinates.end(), "gamma2") - w.coordinates.begin();
  const double se = std::sqrt(w.covariance(idx, idx));
  ASSERT_TRUE(wi[1].lo);
  EXPECT_NEAR(*wi[1].lo, f.mleInternal.gamma2 - z * se, 1e-6);

  // a singular direction through gamma2 invalidates every parameter depending on it
  w.defined[static_cast<std::size_t>(idx)] = false;
  const auto wj = waldIntervals(f, ps, 0.8);
  EXPECT_TRUE(wj[0].lo);
  EXPECT_FALSE(wj[1].lo);
  EXPECT_FALSE(wj[2].lo);
}

TEST(Wald, HeldFixedParametersHaveNoInterval) {
  const FitResult& f = fixtureFit();
  const std::vector<ParamRef> ps{{Param::shape, 0}, {Param::boxcox, 0}};
  for (const auto& wi : waldIntervals(f, ps, 0.9)) {
    EXPECT_FALSE(wi.lo);
    EXPECT_FALSE(wi.hi);
  }
}

TEST(Wald, InformationIsObservedCurvature) {
  const FitResult& f = fixtureFit();
  ASSERT_TRUE(f.wald);
  // plug-in beta covariance sigma^2 (X^T V^-1 X)^-1 from the oracle
  const Eigen::MatrixXd V = oracle::correlation(fixture().coords, f.mleNatural);
  const Eigen::MatrixXd XtViX = fixture().X.transpose() * V.fullPivLu().solve(fixture().X);
  const Eigen::MatrixXd ref = f.sigmaHat * f.sigmaHat * XtViX.inverse();
  EXPECT_LE((f.wald->betaCovariance - ref).cwiseAbs().maxCoeff(), 1e-8 * ref.cwiseAbs().maxCoeff());
}

TEST(FitMLE, JsonCarriesEstimates) {
  const auto j = toJson(fixtureFit());
  EXPECT_EQ(j.at("mode"), "ML");
  EXPECT_DOUBLE_EQ(j.at("mleNatural").at("kappa").get<double>(), 0.5);
  EXPECT_TRUE(j.contains("logLikAtMax"));
}
