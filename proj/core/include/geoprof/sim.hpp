#pragma once

// Gaussian random field simulation and confidence-interval coverage studies.

#include "geoprof/model.hpp"
#include "geoprof/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace geoprof {

/// Covariate built from a coordinate: (coord / scale)^power.
struct CovariateRule {
  std::string name;
  char source = 'x';  // 'x' or 'y'
  double scale = 1.0;
  int power = 1;
};

struct SimDesign {
  // Coordinates: uniform on [0, side]^2 with a minimum separation of
  // minSeparation * side, unless coordsPath names a CSV with x,y columns.
  int n = 100;
  double side = 9000.0;
  double minSeparation = 0.01;
  std::optional<std::string> coordsPath;

  NaturalParams truth = NaturalParams::isotropic(1000.0, 2.0, 0.64, 1.0);
  double sigmaSq = 1.0;
  std::vector<double> beta{2.0, 1.0, 1.0};  // intercept first
  std::vector<CovariateRule> covariates{{"X1", 'x', 10000.0, 1}, {"X2", 'x', 10000.0, 2}};

  int replicates = 100;
  double ciLevel = 0.8;
  std::uint64_t seed = 1;
  bool fixKappaAtTruth = true;
  bool fixLambdaAtTruth = true;

  void validate() const;
};

/// Isotropic design on simulated coordinates: intercept 2, slopes 1 on
/// x/10000 and its square, sigma^2 = 1, tau = 0.8, kappa = 2, range 1000.
SimDesign isotropicDesign();
/// As above with ratio 2 and angle 0.2, intercept 5.
SimDesign anisotropicDesign();

nlohmann::json toJson(const SimDesign& d);
SimDesign simDesignFromJson(const nlohmann::json& j);

/// Uniform points on [0, side]^2, rejecting any closer than minDist to an accepted one.
Eigen::MatrixXd generateCoords(int n, double side, double minDist, std::uint64_t seed);

/// Coordinates and covariate matrix of the design (response zero).
Dataset designDataset(const SimDesign& design);

/// One realization: y = X beta + U + e with Cov(U + e) = sigma^2 (R + nu^2 I),
/// drawn through an LDL^T factorization of the true covariance. Designs with
/// lambda != 1 return the inverse Box-Cox transform.
Dataset simulateGRF(const SimDesign& design, int replicate);

struct CoverageRow {
  std::string name;
  double truth = 0.0;
  int likelihoodHits = 0;
  int likelihoodCount = 0;
  int waldHits = 0;
  int waldCount = 0;
  double likelihoodWidthSum = 0.0;
  int likelihoodWidthCount = 0;  // closed intervals only
  double waldWidthSum = 0.0;

  [[nodiscard]] double likelihoodCoverage() const;
  [[nodiscard]] double waldCoverage() const;
  [[nodiscard]] double likelihoodMeanWidth() const;
  [[nodiscard]] double waldMeanWidth() const;
};

struct CoverageReport {
  double level = 0.8;
  int replicates = 0;
  std::vector<CoverageRow> rows;
  std::vector<std::pair<int, std::string>> failures;
  int regionHits = 0;  // joint (gamma2, gamma3) regions covering the truth
  int regionCount = 0;
  double seconds = 0.0;
};

using CoverageProgress = std::function<void(int replicate, bool ok)>;

/// Per replicate: simulate, run the pipeline, and score both interval types
/// against the truth. Failed replicates are logged and excluded.
CoverageReport runCoverage(const SimDesign& design, PipelineConfig cfg,
                           const CoverageProgress& progress = {});

void writeCoverageCsv(const CoverageReport& r, const std::string& path);
nlohmann::json toJson(const CoverageReport& r);

}  // namespace geoprof
