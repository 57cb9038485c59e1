#include "geoprof/likelihood.hpp"
#include "geoprof/matern.hpp"
#include "geoprof/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace geoprof;

TEST(GenerateCoords, RespectsMinimumSeparation) {
  const Eigen::MatrixXd c = generateCoords(80, 100.0, 3.0, 5);
  ASSERT_EQ(c.rows(), 80);
  for (int i = 0; i < 80; ++i) {
    EXPECT_GE(c(i, 0), 0.0);
    EXPECT_LE(c(i, 0), 100.0);
    for (int j = 0; j < i; ++j) EXPECT_GE((c.row(i) - c.row(j)).norm(), 3.0);
  }
  EXPECT_EQ(c, generateCoords(80, 100.0, 3.0, 5));
}

TEST(DesignDataset, CovariateRules) {
  SimDesign d = isotropicDesign();
  d.n = 20;
  const Dataset ds = designDataset(d);
  ASSERT_EQ(ds.p(), 3);
  EXPECT_EQ(ds.covariateNames[1], "X1");
  for (int i = 0; i < 20; ++i) {
    EXPECT_DOUBLE_EQ(ds.X(i, 1), ds.coords(i, 0) / 10000.0);
    EXPECT_NEAR(ds.X(i, 2), std::pow(ds.coords(i, 0) / 10000.0, 2), 1e-15);
  }
}

TEST(SimulateGRF, ZeroVarianceGivesMeanExactly) {
  SimDesign d = anisotropicDesign();
  d.n = 25;
  d.sigmaSq = 0.0;
  const Dataset ds = simulateGRF(d, 1);
  const Eigen::VectorXd mean = ds.X * Eigen::Vector3d(5.0, 1.0, 1.0);
  EXPECT_LE((transformResponse(ds.y, 1.0) - mean).cwiseAbs().maxCoeff(), 1e-12);

  d.truth = d.truth.withLambda(0.5);
  const Dataset bc = simulateGRF(d, 1);
  EXPECT_LE((boxcoxTransform(bc.y, 0.5) - mean).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SimulateGRF, SeededAndReplicateSpecific) {
  SimDesign d = isotropicDesign();
  d.n = 30;
  const Dataset a = simulateGRF(d, 3), b = simulateGRF(d, 3), c = simulateGRF(d, 4);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
  EXPECT_EQ(a.coords, c.coords);
}

TEST(SimulateGRF, MonteCarloCorrelation) {
  const auto path = (std::filesystem::temp_directory_path() / "geoprof_two_points.csv").string();
  {
    std::ofstream out(path);
    out << "x,y\n0,0\n300,400\n";
  }
  SimDesign d;
  d.coordsPath = path;
  d.truth = NaturalParams::isotropic(800.0, 1.5, 0.0);
  d.covariates.clear();
  d.beta = {0.0};
  const double rho = maternRho(500.0 / 800.0, 1.5);
  const int reps = 10000;
  double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
  for (int r = 0; r < reps; ++r) {
    const Dataset ds = simulateGRF(d, r);
    const double a = ds.y(0), b = ds.y(1);
    sx += a;
    sy += b;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  const double cov = sxy / reps - sx / reps * sy / reps;
  const double corr = cov / std::sqrt((sxx / reps - sx * sx / reps / reps) * (syy / reps - sy * sy / reps / reps));
  EXPECT_NEAR(corr, rho, 0.03);
  std::filesystem::remove(path);
}

TEST(SimDesign, JsonRoundTripAndValidation) {
  const SimDesign d = anisotropicDesign();
  const SimDesign e = simDesignFromJson(toJson(d));
  EXPECT_EQ(toJson(e), toJson(d));
  SimDesign bad = d;
  bad.beta = {1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_THROW(simDesignFromJson({{"unknownKey", 1}}), std::invalid_argument);
}

TEST(RunCoverage, SmallStudyProducesRows) {
  SimDesign d = isotropicDesign();
  d.n = 40;
  d.replicates = 2;
  d.truth = NaturalParams::isotropic(1500.0, 2.0, 0.1);
  PipelineConfig cfg;
  cfg.alphas = {0.01, 0.2, 0.5, 0.9};
  cfg.pointsPerContour = 20;
  cfg.pointsPerContourFixed = 20;
  cfg.kappaFixed.clear();
  cfg.starts = 1;
  const CoverageReport r = runCoverage(d, cfg);
  EXPECT_EQ(r.replicates, 2);
  ASSERT_FALSE(r.rows.empty());
  EXPECT_EQ(r.rows.front().name, "(Intercept)");
  for (const auto& row : r.rows) {
    EXPECT_LE(row.likelihoodHits, row.likelihoodCount);
    EXPECT_LE(row.likelihoodCount + static_cast<int>(r.failures.size()), 2);
  }
  const auto j = toJson(r);
  EXPECT_EQ(j.at("replicates"), 2);
}
