#include "geoprof/distributions.hpp"
#include "geoprof/repsampler.hpp"

#include "oracles.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace geoprof;

namespace {

BatchObjective pointwise(std::function<double(const Eigen::VectorXd&)> f) {
  return [f](const std::vector<Eigen::VectorXd>& xs) {
    std::vector<double> out;
    for (const auto& x : xs) out.push_back(f(x));
    return out;
  };
}

QuadApprox syntheticQuad(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(dim, dim);
  for (int i = 0; i < A.size(); ++i) A.data()[i] = z(rng);
  const Eigen::MatrixXd negH = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
  const InternalParams center{std::log(2.0e6), std::log(1.5), 0.6, 0.4, -0.2};
  return makeQuadApprox(center, KappaRegime::log,
                        dim == 4 ? std::optional<double>(1.5) : std::nullopt, negH);
}

}  // namespace

TEST(NumericHessian, NegativeHalfSquaredNorm) {
  const auto f = pointwise([](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); });
  const Eigen::MatrixXd H = numericHessian(f, Eigen::Vector3d(0.2, -1.0, 3.0));
  EXPECT_LE((H + Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(NumericHessian, DiagonalQuadratic) {
  const auto f = pointwise([](const Eigen::VectorXd& x) { return -x[0] * x[0] - 3 * x[1] * x[1]; });
  const Eigen::MatrixXd H = numericHessian(f, Eigen::Vector2d(0.5, 0.5));
  EXPECT_NEAR(H(0, 0), -2.0, 1e-6);
  EXPECT_NEAR(H(1, 1), -6.0, 1e-6);
  EXPECT_NEAR(H(0, 1), 0.0, 1e-6);
  EXPECT_EQ(H(0, 1), H(1, 0));
}

TEST(NumericHessian, CrossTermsAndStencilSize) {
  EXPECT_EQ(hessianStencil(Eigen::VectorXd::Zero(5), 1e-3).size(), 51u);
  EXPECT_EQ(hessianStencil(Eigen::VectorXd::Zero(4), 1e-3).size(), 33u);
  const auto f = pointwise([](const Eigen::VectorXd& x) { return std::sin(x[0]) * std::exp(x[1]); });
  const Eigen::Vector2d c(0.3, -0.2);
  const Eigen::MatrixXd H = numericHessian(f, c);
  EXPECT_NEAR(H(0, 1), std::cos(c[0]) * std::exp(c[1]), 1e-5);
  EXPECT_NEAR(H(0, 0), -std::sin(c[0]) * std::exp(c[1]), 1e-5);
}

TEST(NumericHessian, ShrinksStepOnceThenFails) {
  // Finite only within 5e-4 of the origin: the 1e-3 stencil fails, 1e-4 succeeds.
  const auto f = pointwise([](const Eigen::VectorXd& x) {
    return x.cwiseAbs().maxCoeff() < 5e-4 ? -x.squaredNorm() : std::nan("");
  });
  const Eigen::MatrixXd H = numericHessian(f, Eigen::Vector2d::Zero());
  EXPECT_NEAR(H(0, 0), -2.0, 1e-4);
  const auto g = pointwise([](const Eigen::VectorXd& x) { return x.norm() > 0 ? std::nan("") : 0.0; });
  EXPECT_THROW(numericHessian(g, Eigen::Vector2d::Zero()), std::runtime_error);
}

TEST(RepairEigenvalues, SignAndFloorRules) {
  EXPECT_EQ(repairEigenvalues(Eigen::Vector3d(4, -3, 2)), Eigen::Vector3d(4, 3, 2));
  EXPECT_EQ(repairEigenvalues(Eigen::Vector3d(150, 0.01, 5)), Eigen::Vector3d(150, 0.1, 5));
  EXPECT_EQ(repairEigenvalues(Eigen::Vector3d(1, 2, 3)), Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(repairEigenvalues(Eigen::Vector3d(-150, 0.01, -0.02)), Eigen::Vector3d(150, 0.1, 0.1));
  EXPECT_EQ(repairEigenvalues(Eigen::Vector3d(100, 0.01, 5)), Eigen::Vector3d(100, 0.01, 5));
  EXPECT_THROW(repairEigenvalues(Eigen::Vector3d::Zero()), std::runtime_error);
}

TEST(QuadApprox, EigenvectorsOrthonormal) {
  const QuadApprox q = syntheticQuad(5, 3);
  EXPECT_LE((q.eigVecs.transpose() * q.eigVecs - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(),
            1e-10);
  EXPECT_GT(q.eigVals.minCoeff(), 0.0);
}

TEST(ChiSquare, QuantilesMatchBoost) {
  EXPECT_NEAR(chisqQuantile(0.95, 1), 3.841459, 1e-6);
  for (double df : {1.0, 2.0, 4.0, 5.0}) {
    for (double a : {1e-5, 0.05, 0.5, 0.95, 0.999}) {
      const boost::math::chi_squared dist(df);
      EXPECT_NEAR(chisqUpperQuantile(a, df), boost::math::quantile(boost::math::complement(dist, a)),
                  1e-9);
    }
  }
  EXPECT_NEAR(normalQuantile(0.99), 2.3263478740408408, 1e-12);
}

TEST(SpherePoints, SquareOnCircle) {
  const auto pts = spherePoints(2, 4, 1);
  EXPECT_GE(minPairwiseDistance(pts), 1.30);
  for (const auto& p : pts) EXPECT_NEAR(p.norm(), 1.0, 1e-12);
}

TEST(SpherePoints, Reproducible) {
  const auto a = spherePoints(4, 30, 9);
  const auto b = spherePoints(4, 30, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(SpherePoints, BeatsRandomConfigurations) {
  const int dim = 5, n = 726;
  const auto pts = spherePoints(dim, n, 11);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  std::vector<double> baseline;
  for (int r = 0; r < 20; ++r) {
    std::vector<Eigen::VectorXd> rnd(n, Eigen::VectorXd(dim));
    for (auto& v : rnd) {
      for (int i = 0; i < dim; ++i) v[i] = z(rng);
      v.normalize();
    }
    baseline.push_back(minPairwiseDistance(rnd));
  }
  std::sort(baseline.begin(), baseline.end());
  const double median = 0.5 * (baseline[9] + baseline[10]);
  EXPECT_GT(minPairwiseDistance(pts), median);
}

TEST(ContourPoints, TrivialMapping) {
  QuadApprox q = makeQuadApprox({}, KappaRegime::log, std::nullopt, Eigen::MatrixXd::Identity(5, 5));
  // c = 1 for the alpha whose 5-df upper quantile is 1
  const double alpha = 1.0 - boost::math::cdf(boost::math::chi_squared(5), 1.0);
  const std::vector<double> alphas{alpha};
  const auto set = contourPoints(q, alphas, 6, 4);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_NEAR(q.freeCoords(set.points[i]).norm(), 1.0, 1e-8);
  }
}

TEST(ContourPoints, QuadraticFormEqualsQuantile) {
  for (int dim : {4, 5}) {
    const QuadApprox q = syntheticQuad(dim, 7 + static_cast<std::uint64_t>(dim));
    const std::vector<double> alphas{1e-5, 0.01, 0.1, 0.5, 0.9, 0.999};
    const auto set = contourPoints(q, alphas, 40, 5);
    ASSERT_EQ(set.size(), alphas.size() * 40);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const double c = chisqUpperQuantile(set.alpha[i], dim);
      EXPECT_NEAR(contourQuadraticForm(q, set.points[i]), c, 1e-8);
      EXPECT_EQ(set.provenance[i].kind, dim == 4 ? Provenance::Kind::kappaFixed : Provenance::Kind::contour);
    }
    // wider contour for smaller alpha
    EXPECT_GT(contourQuadraticForm(q, set.points[0]), contourQuadraticForm(q, set.points[set.size() - 1]));
  }
}

TEST(RepairNugget, IdentityWithoutNegatives) {
  RepresentativeSet s;
  for (int i = 0; i < 5; ++i) s.add({1.0, 0.0, 0.1 * (i + 1), 0.0, 0.0}, 0.5, {});
  const auto r = repairNugget(s, 1);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(r.points[i].nu, s.points[i].nu);
}

TEST(RepairNugget, HalfZeroHalfUniform) {
  RepresentativeSet s;
  for (int i = 0; i < 10; ++i) s.add({1.0, 0.0, -0.1 * (i + 1), 0.2, 0.1}, 0.5, {});
  for (int i = 0; i < 3; ++i) s.add({1.0, 0.0, 0.3, 0.2, 0.1}, 0.5, {});
  const auto r = repairNugget(s, 2);
  int zeros = 0, inside = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const double nug = r.natural[i].nuggetSq();
    if (nug == 0.0) ++zeros;
    else if (nug > 0.0 && nug < 2.0) ++inside;
    EXPECT_EQ(r.points[i].gamma2, 0.2);
  }
  EXPECT_EQ(zeros, 5);
  EXPECT_EQ(inside, 5);
  for (std::size_t i = 10; i < 13; ++i) EXPECT_EQ(r.points[i].nu, 0.3);
}

TEST(RepairNugget, OddCountRoundsZerosDown) {
  RepresentativeSet s;
  for (int i = 0; i < 7; ++i) s.add({1.0, 0.0, -0.5, 0.0, 0.0}, 0.5, {});
  const auto r = repairNugget(s, 3);
  int zeros = 0;
  for (const auto& p : r.natural) zeros += p.nuggetSq() == 0.0;
  EXPECT_EQ(zeros, 3);
}

TEST(LambdaGrid, Examples) {
  const auto g = lambdaGrid(0.5, -100.0, 3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g[0], 0.5 - 2.3263478740408408 * 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(g[1], 0.5);
  EXPECT_NEAR(g[2], 0.5 + 2.3263478740408408 * 0.1, 1e-12);
  EXPECT_EQ(lambdaGrid(0.3, -10.0, 1), std::vector<double>{0.3});

  const auto even = lambdaGrid(0.2, -25.0, 4);
  ASSERT_EQ(even.size(), 5u);
  EXPECT_NEAR(0.5 * (even.front() + even.back()), 0.2, 1e-12);
  EXPECT_TRUE(std::is_sorted(even.begin(), even.end()));
  EXPECT_NE(std::find(even.begin(), even.end(), 0.2), even.end());
}

TEST(LambdaGrid, FlatCurvatureFallsBack) {
  const auto g = lambdaGrid(0.0, 0.5, 3);
  EXPECT_NEAR(g.front(), -1.0, 1e-12);
  EXPECT_NEAR(g.back(), 1.0, 1e-12);
}

TEST(Provenance, StringRoundTrip) {
  for (const Provenance& p : {Provenance{Provenance::Kind::mle, 5, 0.0}, Provenance{Provenance::Kind::mle, 4, 20.0},
                              Provenance{Provenance::Kind::contour, 5, 0.0},
                              Provenance{Provenance::Kind::kappaFixed, 4, 0.9}}) {
    const Provenance q = Provenance::parse(p.str());
    EXPECT_EQ(q.kind, p.kind);
    EXPECT_EQ(q.dim, p.dim);
    EXPECT_EQ(q.kappa, p.kappa);
  }
}

TEST(RepresentativeSetCsv, RoundTrip) {
  const QuadApprox q = syntheticQuad(5, 1);
  const std::vector<double> alphas{0.1, 0.5};
  RepresentativeSet s;
  s.regime = KappaRegime::log;
  s.add(q.center, std::nan(""), {});
  s.append(contourPoints(q, alphas, 8, 2));
  s.lambdaGrid = {0.1, 0.25, 0.5};
  const auto path = (std::filesystem::temp_directory_path() / "geoprof_reps.csv").string();
  writeRepresentativeSetCsv(s, path);
  const auto r = readRepresentativeSetCsv(path);
  ASSERT_EQ(r.size(), s.size());
  EXPECT_EQ(r.lambdaGrid, s.lambdaGrid);
  EXPECT_EQ(r.regime, s.regime);
  EXPECT_TRUE(std::isnan(r.alpha[0]));
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(r.points[i].asVector(), s.points[i].asVector());
    if (i > 0) EXPECT_EQ(r.alpha[i], s.alpha[i]);
    EXPECT_EQ(r.provenance[i].str(), s.provenance[i].str());
  }
  std::filesystem::remove(path);
}

TEST(LikelihoodQuadApprox, AgreesWithHalfStepHessian) {
  std::mt19937_64 rng(31);
  Dataset d = oracle::randomDataset(rng, 50, 2);
  const NaturalParams truth(4.0, 2.0, 0.3, 1.2, 0.2);
  // Response with genuine spatial structure so the likelihood is curved.
  const Eigen::MatrixXd L = oracle::correlation(d.coords, truth).llt().matrixL();
  std::normal_distribution<double> z;
  Eigen::VectorXd e(50);
  for (int i = 0; i < 50; ++i) e(i) = z(rng);
  d.y = (5.0 + (L * e).array()).matrix();
  const InternalParams center = toInternal(truth, KappaRegime::log);

  QuadApproxOptions a;
  a.fixLambda = true;
  QuadApproxOptions b = a;
  b.step = 5e-4;
  const QuadApprox qa = likelihoodQuadApprox(d, center, KappaRegime::log, std::nullopt, 1.0, LikMode::ML, a);
  const QuadApprox qb = likelihoodQuadApprox(d, center, KappaRegime::log, std::nullopt, 1.0, LikMode::ML, b);
  const double scale = qb.negHessian.cwiseAbs().maxCoeff();
  EXPECT_LE((qa.negHessian - qb.negHessian).cwiseAbs().maxCoeff(), 1e-3 * scale);
}
