#pragma once

// The full profile-likelihood workflow on one dataset: MLE fits, quadratic
// approximations, representative points, one batched likelihood grid, and
// the curves and intervals derived from it.

#include "geoprof/likelihood.hpp"
#include "geoprof/mle.hpp"
#include "geoprof/profiles.hpp"
#include "geoprof/repsampler.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geoprof {

struct PipelineConfig {
  LikMode mode = LikMode::ML;
  std::vector<double> alphas{0.00001, 0.01, 0.1, 0.2, 0.25, 0.3, 0.5, 0.8, 0.9, 0.95, 0.99, 0.999};
  std::vector<double> kappaFixed{0.5, 0.9, 10.0, 20.0, 100.0};
  std::vector<double> kappaFixedAlphas{0.01, 0.1, 0.2, 0.25, 0.3, 0.5, 0.8, 0.9, 0.95, 0.99};
  int pointsPerContour = 726;       // 5-dimensional contours
  int pointsPerContourFixed = 120;  // 4-dimensional (shape held fixed)
  int lambdaGridSize = 33;
  std::size_t batchSize = 400;
  double ciLevel = 0.9;
  std::uint64_t seed = 20240917;
  int threads = 0;
  Precision precision = Precision::Double;
  std::optional<double> fixKappa;   // shape held fixed in the main fit
  std::optional<double> fixLambda;
  int starts = 3;
  double hessianStep = 1e-3;
  SphereOptions sphere{};
  std::vector<std::string> params;  // curves to build; empty = every table row

  [[nodiscard]] EvaluateOptions evaluateOptions() const;
  /// Rows the representative set will have for a dataset fitted with these settings.
  [[nodiscard]] std::size_t expectedRepresentativeCount() const;
};

nlohmann::json toJson(const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipelineConfigFromJson(const nlohmann::json& j);

struct CiRow {
  ParamRef param;
  std::string name;
  std::string notation;
  double estimate = 0.0;
  ConfidenceInterval likelihood;
  ConfidenceInterval wald;
};

struct PipelineResult {
  FitResult fit;
  std::vector<FitResult> kappaFits;
  QuadApprox quad;
  std::vector<QuadApprox> kappaQuads;
  RepresentativeSet reps;
  LikGrid grid;
  std::vector<ProfileCurve> curves;
  std::vector<CiRow> table;
  double seconds = 0.0;
};

/// MLE rows (main fit first, then one per companion fit), the main contour
/// family, and one family per companion quadratic approximation, followed
/// by nugget repair. Companion centers are their constrained MLEs.
RepresentativeSet assembleRepresentativeSet(const PipelineConfig& cfg, const QuadApprox& main,
                                            std::span<const QuadApprox> companions);

/// Runs everything up to the likelihood grid (no curves).
PipelineResult runSampling(const Dataset& d, const PipelineConfig& cfg);

/// Curves and the CI table from a sampled result.
void buildProfiles(const Dataset& d, const PipelineConfig& cfg, PipelineResult& res);

PipelineResult runPipeline(const Dataset& d, const PipelineConfig& cfg);

/// 2-D surface for a named pair, e.g. "aniso1,aniso2".
Surface2D pairSurface(const PipelineResult& res, const Dataset& d, const std::string& pair,
                      const Surface2DOptions& opts = {});

}  // namespace geoprof
