#include "geoprof/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace geoprof;

namespace {

Dataset smallDataset() {
  Dataset d;
  d.coords.resize(5, 2);
  d.coords << 0, 0, 1, 0, 0, 1, 1, 1, 2, 3;
  d.y.resize(5);
  d.y << 1.0, 2.0, 3.0, 4.0, 5.0;
  d.X.resize(5, 2);
  d.X.col(0).setOnes();
  d.X.col(1) << 0.1, 0.4, 0.2, 0.9, 0.5;
  d.covariateNames = {"(Intercept)", "elev"};
  return d;
}

}  // namespace

TEST(NaturalParams, NormalizesSwappedRanges) {
  const NaturalParams p(1.0, 3.0, 0.2, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(p.phiX(), 3.0);
  EXPECT_DOUBLE_EQ(p.phiY(), 1.0);
  EXPECT_NEAR(p.phiA(), 0.2 - std::numbers::pi / 2, 1e-12);
  EXPECT_DOUBLE_EQ(p.ratio(), 3.0);
  EXPECT_NEAR(p.combinedRange(), std::sqrt(3.0), 1e-12);
}

TEST(NaturalParams, WrapsAngleIntoHalfOpenInterval) {
  EXPECT_NEAR(wrapAngleHalfPi(std::numbers::pi), 0.0, 1e-12);
  EXPECT_NEAR(wrapAngleHalfPi(-std::numbers::pi / 2), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(wrapAngleHalfPi(std::numbers::pi / 2), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(wrapAngleHalfPi(0.3 + 4 * std::numbers::pi), 0.3, 1e-12);
}

TEST(BoxCox, LogLimit) {
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(7, 0.2, 9.0);
  const Eigen::VectorXd a = boxcoxTransform(y, 1e-8);
  const Eigen::VectorXd b = boxcoxTransform(y, 0.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    EXPECT_LE(std::abs(a(i) - std::log(y(i))), 1e-6);
    EXPECT_DOUBLE_EQ(b(i), std::log(y(i)));
  }
}

TEST(BoxCox, InverseRoundTrip) {
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(9, 0.5, 20.0);
  for (double lambda : {-1.0, -0.3, 0.0, 0.5, 1.0, 2.0}) {
    const Eigen::VectorXd back = boxcoxInverse(boxcoxTransform(y, lambda), lambda);
    EXPECT_LE((back - y).cwiseAbs().maxCoeff(), 1e-10) << lambda;
  }
}

TEST(BoxCox, JacobianExample) {
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(2, std::numbers::e);
  EXPECT_NEAR(boxcoxJacobianLog(y, 2.0), 2.0, 1e-12);
  EXPECT_NEAR(boxcoxJacobianLog(y, 1.0), 0.0, 1e-15);
}

TEST(BoxCox, RejectsNonPositiveResponse) {
  Eigen::VectorXd y(3);
  y << 1.0, 0.0, 2.0;
  EXPECT_THROW(boxcoxTransform(y, 0.5), DomainError);
  EXPECT_THROW(sumLogResponse(std::span<const double>(y.data(), 3)), DomainError);
  Eigen::VectorXd z(1);
  z << -3.0;
  EXPECT_THROW(boxcoxInverse(z, 0.5), DomainError);
}

TEST(Validation, AcceptsWellFormedData) { EXPECT_NO_THROW(validateDataset(smallDataset())); }

TEST(Validation, DuplicateLocation) {
  Dataset d = smallDataset();
  d.coords.row(3) = d.coords.row(1);
  try {
    validateDataset(d);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate location"), std::string::npos);
  }
}

TEST(Validation, RankDeficientDesign) {
  Dataset d = smallDataset();
  d.X.col(1).setConstant(2.0);
  try {
    validateDataset(d);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("rank deficient"), std::string::npos);
  }
}

TEST(Validation, NonPositiveResponseOnlyWhenRequired) {
  Dataset d = smallDataset();
  d.y(2) = -1.0;
  EXPECT_THROW(validateDataset(d), DataError);
  EXPECT_NO_THROW(validateDataset(d, {.requirePositiveResponse = false}));
}

TEST(Validation, TooFewRows) {
  Dataset d = smallDataset();
  d.coords.conservativeResize(3, 2);
  d.y.conservativeResize(3);
  d.X.conservativeResize(3, 2);
  EXPECT_THROW(validateDataset(d), DataError);
}

TEST(DatasetCsv, RoundTripAndCovariateSelection) {
  const auto path = (std::filesystem::temp_directory_path() / "geoprof_model_rt.csv").string();
  const Dataset d = smallDataset();
  writeDatasetCsv(d, path);
  const Dataset r = readDatasetCsv(path);
  ASSERT_EQ(r.n(), d.n());
  ASSERT_EQ(r.p(), d.p());
  EXPECT_EQ(r.covariateNames, d.covariateNames);
  EXPECT_EQ((r.coords - d.coords).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((r.y - d.y).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((r.X - d.X).cwiseAbs().maxCoeff(), 0.0);

  const Dataset selected = readDatasetCsv(path, {"elev"});
  EXPECT_EQ(selected.p(), 2);
  EXPECT_EQ(selected.covariateNames.back(), "elev");
  EXPECT_THROW(readDatasetCsv(path, {"missing"}), DataError);
  std::filesystem::remove(path);
}

TEST(DatasetCsv, MissingFile) { EXPECT_THROW(readDatasetCsv("/nonexistent/geoprof.csv"), DataError); }
